"""Line-spectrum recovery from a (tracked) principal subspace via ESPRIT."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import rng as rnglib
from .fusion import SubspaceEstimate
from .model import CovarianceModel
from .sensing import population_bits, sketch_matrices
from .tracker import rank_two_update, tracker_init, tracker_subspace

COND_TOL = 1e-10


class FieldError(ValueError):
    pass


class ConditioningError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class FrequencyEstimate:
    freqs: np.ndarray  # cycles/sample in [0, 1)
    amplitudes: np.ndarray
    r_used: int


def circular_distance(f, g) -> np.ndarray:
    d = np.abs(np.mod(np.asarray(f, dtype=float) - np.asarray(g, dtype=float), 1.0))
    return np.minimum(d, 1.0 - d)


def match_frequencies(true_freqs, est_freqs) -> np.ndarray:
    """Circular error of each true frequency under the optimal one-to-one assignment."""
    t = np.asarray(true_freqs, dtype=float)
    e = np.asarray(est_freqs, dtype=float)
    e = e[np.isfinite(e)]
    out = np.full(t.size, np.inf)
    if e.size == 0:
        return out
    cost = circular_distance(t[:, None], e[None, :])
    rows, cols = linear_sum_assignment(cost)
    out[rows] = cost[rows, cols]
    return out


def esprit(est: SubspaceEstimate, r: int | None = None) -> FrequencyEstimate:
    """Least-squares ESPRIT on the first r columns of the subspace basis.

    Amplitudes are a proxy: the Rayleigh quotient of diag(eigvals) along
    each shift-invariance eigenvector, clipped at zero.
    """
    if not np.iscomplexobj(est.basis):
        raise FieldError("ESPRIT needs a complex subspace")
    r = est.r if r is None else r
    n = est.n
    if not 1 <= r <= est.r or n < r + 1:
        raise ValueError(f"model order r={r} incompatible with a {n}x{est.r} subspace")
    Us = est.basis[:, :r]
    up, down = Us[:-1], Us[1:]
    sv = np.linalg.svd(up, compute_uv=False)
    if sv[-1] <= COND_TOL * max(sv[0], 1.0):
        raise ConditioningError("shifted subspace is rank deficient")
    Psi = np.linalg.lstsq(up, down, rcond=None)[0]
    z, T = np.linalg.eig(Psi)
    freqs = np.mod(np.angle(z) / (2 * np.pi), 1.0)
    freqs[freqs >= 1.0] = 0.0
    T = T / np.linalg.norm(T, axis=0, keepdims=True)
    amps = np.real(np.einsum("ik,i,ik->k", T.conj(), est.eigvals[:r], T))
    amps = np.clip(amps, 0.0, None)
    order = np.argsort(-amps, kind="stable")
    return FrequencyEstimate(freqs[order], amps[order], r)


def spectrum_track_run(
    model: CovarianceModel,
    m_max: int,
    r_est: int = 5,
    seed: int = 0,
    stride: int = 1,
) -> list[tuple[int, FrequencyEstimate]]:
    """Track the subspace bit by bit from population bits and run ESPRIT.

    Returns one (bit_index, estimate) row every ``stride`` bits and always
    one for the last bit, ceil(m_max / stride) rows in total. Until the
    tracker holds r_est directions, missing entries are NaN.
    """
    if model.field != "complex":
        raise FieldError("line-spectrum tracking runs in complex mode")
    if stride < 1 or m_max < 1:
        raise ValueError("need stride >= 1 and m_max >= 1")
    seeds = rnglib.derive_seeds(m_max, seed, rnglib.SKETCH)
    state = tracker_init(model.n, r_est, "complex")
    rows = []
    block = 4096
    for start in range(0, m_max, block):
        A, B = sketch_matrices(seeds[start:start + block], model.n, "complex")
        ys = population_bits(A, B, model)
        for j in range(len(ys)):
            state = rank_two_update(state, A[j], B[j], int(ys[j]))
            i = start + j + 1
            if i % stride and i != m_max:
                continue
            k = min(r_est, state.columns)
            f = np.full(r_est, np.nan)
            amp = np.full(r_est, np.nan)
            fe = esprit(tracker_subspace(state, k), k)
            f[:k], amp[:k] = fe.freqs, fe.amplitudes
            rows.append((i, FrequencyEstimate(f, amp, k)))
    return rows


def first_hit_index(rows, true_freqs, tol: float = 0.01) -> int:
    """Earliest bit index from which every true frequency stays matched within tol."""
    hit = None
    for i, fe in rows:
        ok = bool(np.all(match_frequencies(true_freqs, fe.freqs) <= tol))
        if ok and hit is None:
            hit = i
        elif not ok:
            hit = None
    return hit if hit is not None else rows[-1][0] + 1
