import json

import numpy as np
import pytest

from onebit import rng as rnglib
from onebit.fusion import SubspaceEstimate
from onebit.harness import (
    ExperimentConfig,
    make_model,
    nmse,
    online_trial,
    rows_to_csv,
    run,
    trial_seeds,
)
from onebit.model import CovarianceModel, gen_random_lowrank

from conftest import random_orthogonal


def test_nmse_exact_and_orthogonal():
    model = CovarianceModel(np.eye(5)[:, :2], np.array([2.0, 1.0]))
    assert nmse(np.eye(5)[:, :2], model) == 0.0
    assert nmse(np.eye(5)[:, 2:4], model) == 1.0


def test_nmse_partial_overlap():
    # lambda = (3, 1), estimate captures only the weaker direction
    model = CovarianceModel(np.eye(4)[:, :2], np.array([3.0, 1.0]))
    assert nmse(np.eye(4)[:, 1:2], model) == pytest.approx(0.75)


def test_nmse_rotation_invariant(rng):
    model = gen_random_lowrank(8, 3, 2)
    Q = random_orthogonal(rng, 3)
    B = np.linalg.qr(rng.standard_normal((8, 3)))[0]
    assert nmse(B @ Q, model) == pytest.approx(nmse(B, model), abs=1e-12)
    assert nmse(model.basis @ Q, model) == pytest.approx(0.0, abs=1e-12)


def test_nmse_dimension_check():
    with pytest.raises(ValueError):
        nmse(np.eye(4)[:, :1], gen_random_lowrank(5, 1, 0))


@pytest.mark.parametrize("bad", [
    {"experiment": "nope"},
    {"experiment": "flip_sweep", "eps_grid": [0.6]},
    {"experiment": "flip_sweep", "eps_grid": []},
    {"experiment": "nmse_vs_m", "m_grid": [0]},
    {"experiment": "nmse_vs_m", "field": "quaternion"},
    {"experiment": "nmse_vs_m", "trials": 0},
    {"experiment": "nmse_vs_m", "noise_var": -1.0},
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig(**bad)


def test_config_unknown_key():
    with pytest.raises(ValueError):
        ExperimentConfig.from_json({"experiment": "nmse_vs_m", "sigma": 1})


def test_config_json_roundtrip(tmp_path):
    cfg = ExperimentConfig("flip_sweep", eps_grid=[0.0, 0.2], trials=3)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_json()))
    assert ExperimentConfig.from_json(str(p)) == cfg
    assert ExperimentConfig.from_json(json.dumps(cfg.to_json())) == cfg


def test_trial_seeds_prefix_stable():
    a = trial_seeds(ExperimentConfig("nmse_vs_m", trials=3, root_seed=5))
    b = trial_seeds(ExperimentConfig("nmse_vs_m", trials=5, root_seed=5))
    assert b[:3] == a
    assert a[0] == rnglib.derive_seed(5, 0)


def test_make_model_kinds():
    cfg = ExperimentConfig("sample_sweep", n=10)
    m = make_model(cfg, 2, 1)
    np.testing.assert_allclose(m.eigvals, [1, 1])
    cfg = ExperimentConfig("nmse_vs_m", n=10, model="toeplitz", freqs=[0.1, 0.6], powers=[1, 1], field="complex")
    assert make_model(cfg, 2, 1).field == "complex"


SMALL = dict(n=12, r=2, m_grid=[100, 400], trials=3, root_seed=11)


def test_flip_zero_equals_plain_sweep():
    plain = run(ExperimentConfig("nmse_vs_m", **SMALL))
    flip = run(ExperimentConfig("flip_sweep", eps_grid=[0.0], **SMALL))
    for a, b in zip(plain, flip):
        assert a["m"] == b["m"] and a["nmse_median"] == b["nmse_median"]


def test_flip_half_destroys_signal():
    rows = run(ExperimentConfig("flip_sweep", eps_grid=[0.0, 0.5], **{**SMALL, "m_grid": [2000]}))
    by_eps = {r["eps"]: r["nmse_median"] for r in rows}
    assert by_eps[0.0] < by_eps[0.5]


def test_rank_grid_rows():
    rows = run(ExperimentConfig("nmse_vs_m", r_grid=[1, 2], **SMALL))
    assert [(r["r"], r["m"]) for r in rows] == [(1, 100), (1, 400), (2, 100), (2, 400)]


@pytest.mark.parametrize("exp,extra", [
    ("nmse_vs_m", {}),
    ("flip_sweep", {"eps_grid": [0.0, 0.3]}),
    ("sample_sweep", {"T_grid": [1, 5], "noise_var": 0.1}),
    ("sample_sweep", {"T_grid": [3], "shared_samples": False}),
    ("online_run", {"stride": 100}),
    ("convex_compare", {}),
    ("bounds_fig1", {"r_grid": [1, 2], "mc_trials": 2000}),
    ("spectrum_run", {"field": "complex", "freqs": [0.1, 0.5], "powers": [1, 1], "r_est": 3, "stride": 50}),
])
def test_runners_deterministic(exp, extra):
    cfg = ExperimentConfig(exp, **{**SMALL, **extra})
    a, b = rows_to_csv(run(cfg)), rows_to_csv(run(cfg))
    assert a == b and a.count("\n") >= 2


def test_online_lossless_matches_batch():
    # r_est >= 2 m keeps every direction, so the online basis spans the batch top-r space
    cfg = ExperimentConfig("online_run", n=14, r=1, r_est=12, m_grid=[6], trials=1)
    seed = trial_seeds(cfg)[0]
    online, batch = online_trial(cfg, seed, [1, 2, 3, 6])
    for m in online:
        assert online[m] == pytest.approx(batch[m], abs=1e-8)


def test_online_rows_cover_stride():
    rows = run(ExperimentConfig("online_run", stride=150, **SMALL))
    assert [r["m"] for r in rows] == [100, 150, 300, 400]


def test_csv_format():
    rows = [{"a": 1, "b": 0.1 + 0.2, "c": 2**64 - 1, "d": float("nan")}]
    text = rows_to_csv(rows)
    assert text == "a,b,c,d\n1,0.3,18446744073709551615,nan\n"
    assert rows_to_csv([{"x": 1 / 3}]).splitlines()[1] == "0.333333333"


def test_rows_carry_seeds():
    rows = run(ExperimentConfig("nmse_vs_m", **SMALL))
    assert rows[0]["root_seed"] == 11
    assert rows[0]["trial_seeds"].split(";") == [str(s) for s in trial_seeds(ExperimentConfig("nmse_vs_m", **SMALL))]


def test_sample_sweep_large_T_close_to_exact():
    cfg = ExperimentConfig("sample_sweep", T_grid=[2000], **SMALL)
    rows = run(cfg)
    assert all(r["agreement_median"] > 0.9 for r in rows)
