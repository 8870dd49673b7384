import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from onebit import rng as rnglib
from onebit.fusion import (
    SubspaceEstimate,
    Surrogate,
    build_surrogate,
    capped_simplex_direction,
    convex_estimate,
    estimate_subspace,
    surrogate_from_arrays,
)
from onebit.harness import nmse
from onebit.model import CovarianceModel, gen_random_lowrank
from onebit.sensing import BitRecord, make_bits, population_bits, sketch_matrices, sketch_pair

from conftest import projector
from oracles import cvxpy_psd_max, grid_capped_max, naive_surrogate


def exact_bits(model, m, seed):
    seeds = rnglib.derive_seeds(m, seed, rnglib.SKETCH)
    A, B = sketch_matrices(seeds, model.n, model.field)
    y = population_bits(A, B, model)
    return y, A, B, seeds


def test_surrogate_single_bit():
    # a pair with a = e1, b = e2 is not reachable from a seed; use the array form
    e = np.eye(4)
    J = surrogate_from_arrays(np.array([1]), e[:1], e[1:2])
    np.testing.assert_array_equal(J, np.diag([1.0, -1.0, 0, 0]))


@pytest.mark.parametrize("field", ["real", "complex"])
def test_surrogate_matches_naive(field):
    bits = make_bits([1, -1, 1], [11, 12, 13])
    S = build_surrogate(bits, 5, field)
    A, B = sketch_matrices([11, 12, 13], 5, field)
    np.testing.assert_allclose(S.J, naive_surrogate([1, -1, 1], A, B), atol=1e-12)
    assert S.m == 3


def test_surrogate_sign_flip_linear():
    bits = make_bits([1, -1, 1, 1], [3, 4, 5, 6])
    neg = [BitRecord(-b.y, b.sketch_seed, b.sensor_id) for b in bits]
    np.testing.assert_array_equal(build_surrogate(neg, 6).J, -build_surrogate(bits, 6).J)


def test_surrogate_order_independent(rng):
    model = gen_random_lowrank(8, 2, 0)
    y, A, B, seeds = exact_bits(model, 300, 1)
    bits = make_bits(y, seeds)
    perm = rng.permutation(len(bits))
    J1 = build_surrogate(bits, 8).J
    J2 = build_surrogate([bits[i] for i in perm], 8).J
    np.testing.assert_allclose(J1, J2, atol=1e-12)


def test_surrogate_trace_and_symmetry():
    y, A, B, seeds = exact_bits(gen_random_lowrank(6, 2, 2), 50, 3)
    S = build_surrogate(make_bits(y, seeds), 6)
    ref = np.mean(y * (np.sum(A**2, 1) - np.sum(B**2, 1)))
    assert np.trace(S.J) == pytest.approx(ref, rel=1e-9)
    np.testing.assert_allclose(S.J, S.J.T, atol=1e-10)


def test_surrogate_errors():
    with pytest.raises(ValueError):
        build_surrogate([], 3)


def test_estimate_diag():
    est = estimate_subspace(np.diag([1.0, 0.5, -0.2]), 1)
    np.testing.assert_allclose(np.abs(est.basis[:, 0]), [1, 0, 0])


def test_estimate_full_space():
    model = gen_random_lowrank(5, 2, 1)
    est = estimate_subspace(Surrogate(np.diag([3.0, 1, -1, 2, 0.5]), 1), 5)
    assert nmse(est, model) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        estimate_subspace(np.eye(3), 4)


def test_estimate_rank_one_many_bits():
    u = np.ones((10, 1)) / np.sqrt(10)
    model = CovarianceModel(u, np.array([1.0]))
    y, A, B, _ = exact_bits(model, 50_000, 7)
    est = estimate_subspace(surrogate_from_arrays(y, A, B), 1)
    assert nmse(est, model) < 0.05


def test_estimate_eigvals_descending():
    G = np.random.default_rng(0).standard_normal((6, 6))
    est = estimate_subspace(G + G.T, 4)
    assert np.all(np.diff(est.eigvals) <= 0)


def test_subspace_json_roundtrip():
    G = np.random.default_rng(1).standard_normal((5, 5)) + 1j * np.random.default_rng(2).standard_normal((5, 5))
    est = estimate_subspace(G + G.conj().T, 2)
    back = SubspaceEstimate.from_json(est.to_json())
    np.testing.assert_array_equal(back.basis, est.basis)
    np.testing.assert_array_equal(back.eigvals, est.eigvals)


# -- concentration and nullity of the surrogate ---------------------------

def test_surrogate_concentration_ratio():
    model = gen_random_lowrank(20, 3, 4)
    def gap(m, seed):
        y1, A1, B1, _ = exact_bits(model, m, seed)
        y2, A2, B2, _ = exact_bits(model, 4 * m, seed + 10_000)
        return np.linalg.norm(surrogate_from_arrays(y1, A1, B1) - surrogate_from_arrays(y2, A2, B2), 2)
    small = np.median([gap(2000, s) for s in range(20)])
    large = np.median([gap(8000, s) for s in range(20)])
    assert 1.6 <= small / large <= 2.6


@pytest.mark.slow
@pytest.mark.parametrize("field", ["real", "complex"])
def test_minor_space_nullity_surrogate(field):
    model = gen_random_lowrank(6, 2, 5, field)
    # a unit probe orthogonal to span(U)
    g = np.random.default_rng(3).standard_normal(6)
    v = g - model.basis @ (model.basis.conj().T @ g)
    v /= np.linalg.norm(v)
    y, A, B, _ = exact_bits(model, 100_000, 9)
    per_bit = y * (np.abs(A.conj() @ v) ** 2 - np.abs(B.conj() @ v) ** 2)
    # v^H J v is the mean of per_bit
    se = per_bit.std(ddof=1) / np.sqrt(len(per_bit))
    assert abs(per_bit.mean()) < 3 * se


# -- convex program ---------------------------------------------------------

def test_convex_single_direction():
    Sigma, est = convex_estimate(np.diag([1.0, 0, 0]), 3, 1)
    np.testing.assert_allclose(Sigma, np.diag([1.0, 0, 0]), atol=1e-12)


def test_convex_equal_split():
    J = np.diag([1.0, 1.0, 0, 0, 0])
    Sigma, _ = convex_estimate(J, 5, 4)
    np.testing.assert_allclose(np.diag(Sigma), [2**-0.5, 2**-0.5, 0, 0, 0], atol=1e-12)


def test_convex_nonpositive_returns_zero():
    Sigma, _ = convex_estimate(-np.eye(3), 3, 2)
    np.testing.assert_array_equal(Sigma, 0)


def test_capped_ties_exceeding_rank():
    s = capped_simplex_direction(np.array([1.0, 1.0, 1.0, 1.0]), 1)
    np.testing.assert_allclose(s, 0.25)
    assert s.sum() == pytest.approx(1.0)


def _check_feasible(Sigma, r):
    w = np.linalg.eigvalsh(Sigma)
    assert w.min() >= -1e-10
    assert np.linalg.norm(Sigma) <= 1 + 1e-9
    assert np.abs(w).sum() <= np.sqrt(r) + 1e-9


@pytest.mark.parametrize("n,r", [(3, 1), (3, 2), (4, 1), (4, 2)])
@pytest.mark.parametrize("seed", range(3))
def test_convex_vs_grid_oracle(n, r, seed):
    G = np.random.default_rng(100 * n + 10 * r + seed).standard_normal((n, n))
    J = G + G.T
    Sigma, _ = convex_estimate(J, n, r)
    _check_feasible(Sigma, r)
    obj = np.trace(J @ Sigma)
    d = np.linalg.eigvalsh(J)
    ref, _ = grid_capped_max(d, r)
    assert obj >= ref - 1e-12 * abs(ref)
    assert obj == pytest.approx(ref, rel=1e-4)


@pytest.mark.parametrize("r", [1, 2, 3])
@pytest.mark.parametrize("seed", range(4))
def test_convex_vs_sdp_oracle(r, seed):
    # full PSD matrices: checks that restricting to J's eigenbasis loses nothing
    pytest.importorskip("cvxpy")
    G = np.random.default_rng(seed).standard_normal((3, 3))
    J = G + G.T
    Sigma, _ = convex_estimate(J, 3, r)
    ref, _ = cvxpy_psd_max(J, r)
    assert np.trace(J @ Sigma) == pytest.approx(ref, rel=1e-4, abs=1e-7)


vec = arrays(np.float64, st.integers(1, 8), elements=st.floats(-5, 5, allow_nan=False, allow_subnormal=False))


@given(vec, st.integers(1, 8))
def test_capped_direction_kkt_property(d, r):
    s = capped_simplex_direction(d, r)
    assert np.all(s >= 0)
    assert np.linalg.norm(s) <= 1 + 1e-9
    assert s.sum() <= np.sqrt(r) + 1e-9
    # optimal against random feasible candidates
    g = np.random.default_rng(0).random((200, d.size))
    l1, l2 = g.sum(1), np.linalg.norm(g, axis=1)
    cand = g * np.minimum(1 / l2, np.sqrt(r) / l1)[:, None]
    assert d @ s >= (cand @ d).max() - 1e-9


@given(arrays(np.float64, 4, elements=st.floats(-3, 3, allow_nan=False, allow_subnormal=False)), st.integers(1, 3))
def test_capped_direction_vs_grid_property(d, r):
    ref, _ = grid_capped_max(d, r, points=12, rounds=30)
    got = d @ capped_simplex_direction(d, r)
    assert got >= ref - 1e-9
    assert got == pytest.approx(ref, rel=1e-4, abs=1e-9)


def test_convex_subspace_matches_evd_when_support_large():
    model = gen_random_lowrank(20, 3, 6)
    y, A, B, _ = exact_bits(model, 2000, 6)
    J = surrogate_from_arrays(y, A, B)
    Sigma, est = convex_estimate(J, 20, 3)
    _check_feasible(Sigma, 3)
    ref = estimate_subspace(J, 3)
    np.testing.assert_allclose(projector(est.basis), projector(ref.basis), atol=1e-8)
