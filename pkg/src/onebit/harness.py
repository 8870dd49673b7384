"""Experiment configuration, the NMSE metric and Monte Carlo runners.

Every runner is a deterministic function of its :class:`ExperimentConfig`.
Trial ``t`` uses the seed ``derive_seed(root_seed, t)``; the model, sketch
seeds, flip draws and data samples of a trial are split off that seed, so
any row can be replayed from the seeds it records.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import rng as rnglib
from .bounds import expected_diag_mc
from .fusion import SubspaceEstimate, convex_estimate, estimate_subspace
from .model import (
    CovarianceModel,
    SampleStream,
    gen_orthonormal_model,
    gen_random_lowrank,
    gen_toeplitz_vandermonde,
)
from .sensing import flip_array, population_bits, sample_bits, sketch_matrices
from .spectrum import spectrum_track_run
from .tracker import rank_two_update, tracker_init, tracker_subspace

EXPERIMENTS = (
    "nmse_vs_m",
    "flip_sweep",
    "sample_sweep",
    "online_run",
    "bounds_fig1",
    "spectrum_run",
    "convex_compare",
)


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 40
    r: int = 3
    r_est: int | None = None
    m_grid: list[int] = field(default_factory=lambda: [500, 2000, 8000])
    T_grid: list[int] = field(default_factory=lambda: [10, 100, 200])
    eps_grid: list[float] = field(default_factory=lambda: [0.0])
    noise_var: float = 0.0
    field: str = "real"
    trials: int = 10
    root_seed: int = 0
    output_path: str | None = None
    # optional knobs
    r_grid: list[int] | None = None
    model: str | None = None  # random_lowrank | orthonormal | toeplitz
    eigvals: list[float] | None = None
    freqs: list[float] | None = None
    powers: list[float] | None = None
    stride: int = 100
    shared_samples: bool = True
    mc_trials: int = 100_000
    tracker_order: str = "algebraic"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        for name in ("m_grid", "T_grid", "eps_grid"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        if any(m < 1 for m in self.m_grid) or any(T < 1 for T in self.T_grid):
            raise ValueError("m and T grid values must be positive")
        if any(not 0.0 <= e <= 0.5 for e in self.eps_grid):
            raise ValueError("flip probabilities must lie in [0, 0.5]")
        if self.noise_var < 0:
            raise ValueError("noise variance must be nonnegative")
        if self.field not in ("real", "complex"):
            raise ValueError(f"unknown field {self.field!r}")
        if self.trials < 1 or self.stride < 1:
            raise ValueError("trials and stride must be positive")
        if not 0 <= self.root_seed < 2**64:
            raise ValueError("root_seed must be an unsigned 64-bit integer")

    @classmethod
    def from_json(cls, doc: dict | str | Path) -> "ExperimentConfig":
        if isinstance(doc, Path) or (isinstance(doc, str) and not doc.lstrip().startswith("{")):
            doc = Path(doc).read_text()
        if isinstance(doc, str):
            doc = json.loads(doc)
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def to_json(self) -> dict:
        return asdict(self)


def nmse(est: SubspaceEstimate | np.ndarray, truth: CovarianceModel) -> float:
    """||(I - U_hat U_hat^H) X||_F^2 / ||X||_F^2 with X = U diag(sqrt(lambda))."""
    B = est.basis if isinstance(est, SubspaceEstimate) else np.asarray(est)
    if B.shape[0] != truth.n:
        raise ValueError(f"estimate dimension {B.shape[0]} != model dimension {truth.n}")
    X = truth.factor
    total = np.linalg.norm(X) ** 2
    captured = np.linalg.norm(B.conj().T @ X) ** 2
    return float(min(max(1.0 - captured / total, 0.0), 1.0))


def trial_seeds(cfg: ExperimentConfig) -> list[int]:
    return [rnglib.derive_seed(cfg.root_seed, t) for t in range(cfg.trials)]


def make_model(cfg: ExperimentConfig, r: int, seed: int) -> CovarianceModel:
    kind = cfg.model or ("orthonormal" if cfg.experiment == "sample_sweep" else "random_lowrank")
    if kind == "random_lowrank":
        return gen_random_lowrank(cfg.n, r, rnglib.derive_seed(seed, rnglib.MODEL), cfg.field)
    if kind == "orthonormal":
        lam = cfg.eigvals if cfg.eigvals is not None else [1.0] * r
        return gen_orthonormal_model(cfg.n, r, lam, rnglib.derive_seed(seed, rnglib.MODEL), cfg.field)
    if kind == "toeplitz":
        return gen_toeplitz_vandermonde(cfg.n, cfg.freqs, cfg.powers)
    raise ValueError(f"unknown model kind {kind!r}")


def _prefix_surrogates(y, A, B, grid):
    """Yield (m, J_m) for sorted m in grid, accumulating sums over prefixes."""
    n = A.shape[1]
    S = np.zeros((n, n), dtype=A.dtype)
    done = 0
    for m in sorted(grid):
        seg = slice(done, m)
        S = S + (A[seg].T * y[seg]) @ A[seg].conj() - (B[seg].T * y[seg]) @ B[seg].conj()
        done = m
        J = S / m
        yield m, 0.5 * (J + J.conj().T)


def _trial_setup(cfg, r, seed, m_max):
    model = make_model(cfg, r, seed)
    seeds = rnglib.derive_seeds(m_max, seed, rnglib.SKETCH)
    A, B = sketch_matrices(seeds, cfg.n, cfg.field)
    return model, A, B


def _summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    q25, med, q75 = np.quantile(v, [0.25, 0.5, 0.75])
    return {"median": med, "q25": q25, "q75": q75}


def _seed_cols(cfg, seeds) -> dict:
    return {"root_seed": cfg.root_seed, "trial_seeds": ";".join(str(s) for s in seeds)}


def run_nmse_vs_m(cfg: ExperimentConfig) -> list[dict]:
    """Truncated-EVD NMSE on exact population bits, per (r, m)."""
    seeds = trial_seeds(cfg)
    ranks = cfg.r_grid or [cfg.r]
    m_max = max(cfg.m_grid)
    rows = []
    for r in ranks:
        res = {m: [] for m in cfg.m_grid}
        for seed in seeds:
            model, A, B = _trial_setup(cfg, r, seed, m_max)
            y = population_bits(A, B, model)
            for m, J in _prefix_surrogates(y, A, B, cfg.m_grid):
                res[m].append(nmse(estimate_subspace(J, r), model))
        for m in cfg.m_grid:
            s = _summary(res[m])
            rows.append({
                "experiment": cfg.experiment, "n": cfg.n, "r": r, "m": m, "trials": cfg.trials,
                "nmse_median": s["median"], "nmse_q25": s["q25"], "nmse_q75": s["q75"],
                **_seed_cols(cfg, seeds),
            })
    return rows


def run_flip_sweep(cfg: ExperimentConfig) -> list[dict]:
    """As :func:`run_nmse_vs_m` with every bit passed through the flip channel."""
    seeds = trial_seeds(cfg)
    m_max = max(cfg.m_grid)
    res = {(m, e): [] for m in cfg.m_grid for e in cfg.eps_grid}
    for seed in seeds:
        model, A, B = _trial_setup(cfg, cfg.r, seed, m_max)
        y = population_bits(A, B, model)
        for eps in cfg.eps_grid:
            yf = flip_array(y, eps, rnglib.derive_seed(seed, rnglib.FLIP))
            for m, J in _prefix_surrogates(yf, A, B, cfg.m_grid):
                res[m, eps].append(nmse(estimate_subspace(J, cfg.r), model))
    rows = []
    for m in cfg.m_grid:
        for eps in cfg.eps_grid:
            s = _summary(res[m, eps])
            rows.append({
                "experiment": cfg.experiment, "n": cfg.n, "r": cfg.r, "m": m, "eps": eps,
                "trials": cfg.trials,
                "nmse_median": s["median"], "nmse_q25": s["q25"], "nmse_q75": s["q75"],
                **_seed_cols(cfg, seeds),
            })
    return rows


def _sensor_bits(cfg, model, A, B, seed, T_grid):
    """Bits for every T in T_grid; larger T extends the same sample sequence."""
    T_max = max(T_grid)
    if cfg.shared_samples:
        X = SampleStream(model, cfg.noise_var, rnglib.derive_seed(seed, rnglib.SAMPLES)).draw(T_max)
        return {T: sample_bits(A, B, X[:T]) for T in T_grid}
    out = {T: np.empty(A.shape[0], dtype=int) for T in T_grid}
    for i in range(A.shape[0]):
        X = SampleStream(model, cfg.noise_var, rnglib.derive_seed(seed, rnglib.SAMPLES, i)).draw(T_max)
        for T in T_grid:
            out[T][i] = sample_bits(A[i:i + 1], B[i:i + 1], X[:T])[0]
    return out


def run_sample_sweep(cfg: ExperimentConfig) -> list[dict]:
    """NMSE and bit agreement when sensors average T (possibly noisy) samples."""
    seeds = trial_seeds(cfg)
    m_max = max(cfg.m_grid)
    res = {(m, T): [] for m in cfg.m_grid for T in cfg.T_grid}
    agree = {(m, T): [] for m in cfg.m_grid for T in cfg.T_grid}
    for seed in seeds:
        model, A, B = _trial_setup(cfg, cfg.r, seed, m_max)
        truth = population_bits(A, B, model)
        bits = _sensor_bits(cfg, model, A, B, seed, cfg.T_grid)
        for T in cfg.T_grid:
            for m, J in _prefix_surrogates(bits[T], A, B, cfg.m_grid):
                res[m, T].append(nmse(estimate_subspace(J, cfg.r), model))
                agree[m, T].append(float(np.mean(bits[T][:m] == truth[:m])))
    rows = []
    for m in cfg.m_grid:
        for T in cfg.T_grid:
            s = _summary(res[m, T])
            rows.append({
                "experiment": cfg.experiment, "n": cfg.n, "r": cfg.r, "m": m, "T": T,
                "noise_var": cfg.noise_var, "trials": cfg.trials,
                "nmse_median": s["median"], "nmse_q25": s["q25"], "nmse_q75": s["q75"],
                "agreement_median": float(np.median(agree[m, T])),
                **_seed_cols(cfg, seeds),
            })
    return rows


def online_trial(cfg: ExperimentConfig, seed: int, checkpoints) -> tuple[dict, dict]:
    """Online and batch NMSE at each checkpoint for one trial."""
    r_est = cfg.r_est or cfg.r
    m_max = max(checkpoints)
    model, A, B = _trial_setup(cfg, cfg.r, seed, m_max)
    y = population_bits(A, B, model)
    state = tracker_init(cfg.n, r_est, cfg.field, order=cfg.tracker_order)
    marks = set(checkpoints)
    online = {}
    for i in range(m_max):
        state = rank_two_update(state, A[i], B[i], int(y[i]))
        if i + 1 in marks:
            k = min(cfg.r, state.columns)
            online[i + 1] = nmse(tracker_subspace(state, k), model)
    batch = {m: nmse(estimate_subspace(J, cfg.r), model) for m, J in _prefix_surrogates(y, A, B, checkpoints)}
    return online, batch


def _checkpoints(cfg) -> list[int]:
    m_max = max(cfg.m_grid)
    marks = set(range(cfg.stride, m_max + 1, cfg.stride)) | {m_max} | set(cfg.m_grid)
    return sorted(marks)


def run_online(cfg: ExperimentConfig) -> list[dict]:
    """Tracker NMSE every ``stride`` bits next to the batch estimate on the same bits."""
    seeds = trial_seeds(cfg)
    marks = _checkpoints(cfg)
    on = {m: [] for m in marks}
    ba = {m: [] for m in marks}
    for seed in seeds:
        o, b = online_trial(cfg, seed, marks)
        for m in marks:
            on[m].append(o[m])
            ba[m].append(b[m])
    rows = []
    for m in marks:
        so, sb = _summary(on[m]), _summary(ba[m])
        rows.append({
            "experiment": cfg.experiment, "n": cfg.n, "r": cfg.r, "r_est": cfg.r_est or cfg.r,
            "m": m, "trials": cfg.trials,
            "online_median": so["median"], "online_q25": so["q25"], "online_q75": so["q75"],
            "batch_median": sb["median"], "batch_q25": sb["q25"], "batch_q75": sb["q75"],
            **_seed_cols(cfg, seeds),
        })
    return rows


def run_convex_compare(cfg: ExperimentConfig) -> list[dict]:
    """Truncated EVD and the convex program on identical bits."""
    seeds = trial_seeds(cfg)
    m_max = max(cfg.m_grid)
    evd = {m: [] for m in cfg.m_grid}
    cvx = {m: [] for m in cfg.m_grid}
    for seed in seeds:
        model, A, B = _trial_setup(cfg, cfg.r, seed, m_max)
        y = population_bits(A, B, model)
        for m, J in _prefix_surrogates(y, A, B, cfg.m_grid):
            evd[m].append(nmse(estimate_subspace(J, cfg.r), model))
            cvx[m].append(nmse(convex_estimate(J, cfg.n, cfg.r)[1], model))
    rows = []
    for m in cfg.m_grid:
        se, sc = _summary(evd[m]), _summary(cvx[m])
        rows.append({
            "experiment": cfg.experiment, "n": cfg.n, "r": cfg.r, "m": m, "trials": cfg.trials,
            "evd_median": se["median"], "evd_q25": se["q25"], "evd_q75": se["q75"],
            "convex_median": sc["median"], "convex_q25": sc["q25"], "convex_q75": sc["q75"],
            **_seed_cols(cfg, seeds),
        })
    return rows


def run_bounds_fig1(cfg: ExperimentConfig) -> list[dict]:
    """Analytic lower bounds next to the Monte Carlo value, per rank."""
    rows = []
    for r in cfg.r_grid or list(range(1, 11)):
        lam = np.asarray(cfg.eigvals[:r], dtype=float) if cfg.eigvals else np.ones(r)
        seed = rnglib.derive_seed(cfg.root_seed, r)
        rep = expected_diag_mc(lam, 1, cfg.mc_trials, seed, cfg.field)
        rows.append({
            "r": rep.r, "kappa": rep.kappa, "bound_exp": rep.bound_exp, "bound_poly": rep.bound_poly,
            "alpha": rep.alpha, "mc_value": rep.mc_value, "mc_stderr": rep.mc_stderr,
            "trials": rep.trials, "field": rep.field, "root_seed": cfg.root_seed, "trial_seed": seed,
        })
    return rows


def run_spectrum(cfg: ExperimentConfig) -> list[dict]:
    """Per-bit ESPRIT estimates from the online tracker (one trial)."""
    freqs = cfg.freqs if cfg.freqs is not None else [0.1, 0.7, 0.725]
    powers = cfg.powers if cfg.powers is not None else [1.0] * len(freqs)
    model = gen_toeplitz_vandermonde(cfg.n, freqs, powers)
    r_est = cfg.r_est or 5
    seed = rnglib.derive_seed(cfg.root_seed, 0)
    out = spectrum_track_run(model, max(cfg.m_grid), r_est, seed, cfg.stride)
    rows = []
    for i, fe in out:
        row = {"bit_index": i}
        row.update({f"f_{k + 1}": fe.freqs[k] for k in range(r_est)})
        row.update({f"amp_{k + 1}": fe.amplitudes[k] for k in range(r_est)})
        row.update({"root_seed": cfg.root_seed, "trial_seed": seed})
        rows.append(row)
    return rows


RUNNERS: dict[str, Callable[[ExperimentConfig], list[dict]]] = {
    "nmse_vs_m": run_nmse_vs_m,
    "flip_sweep": run_flip_sweep,
    "sample_sweep": run_sample_sweep,
    "online_run": run_online,
    "bounds_fig1": run_bounds_fig1,
    "spectrum_run": run_spectrum,
    "convex_compare": run_convex_compare,
}


def run(cfg: ExperimentConfig) -> list[dict]:
    return RUNNERS[cfg.experiment](cfg)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return f"{float(v):.9g}"
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(row[k]) for k in header])
    return buf.getvalue()


def write_csv(rows: list[dict], path: str | Path | None) -> str:
    text = rows_to_csv(rows)
    if path is not None:
        Path(path).write_text(text)
    return text
