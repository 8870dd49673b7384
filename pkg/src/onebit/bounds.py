"""Spectral-gap lower bounds for the expected surrogate and their Monte Carlo check.

For Sigma = sum_j lambda_j u_j u_j^H, the expected surrogate satisfies

    u_k^H E[J] u_k >= max{(1 + kappa)^-(r-1), exp(-kappa) / (9 r)},
    v^H E[J] v = 0 for v orthogonal to every u_j,

with kappa = lambda_1 / lambda_k. The Monte Carlo estimators below draw full
Gaussian sketch vectors against a random orthonormal basis and average the
realized statistic sign(<W, Sigma>) * <W, u u^H> directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rnglib
from .model import gen_orthonormal_model

CHUNK = 20_000


@dataclass(frozen=True)
class BoundReport:
    r: int
    kappa: float
    bound_exp: float
    bound_poly: float
    alpha: float
    mc_value: float = float("nan")
    mc_stderr: float = float("nan")
    trials: int = 0
    field: str = "complex"


def _check_eigs(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size == 0 or np.any(lam <= 0):
        raise ValueError("eigenvalues must be a non-empty positive vector")
    if np.any(np.diff(lam) > 0):
        raise ValueError("eigenvalues must be descending")
    return lam


def alpha_lower_bound(lam, k: int = 1) -> BoundReport:
    lam = _check_eigs(lam)
    r = lam.size
    if not 1 <= k <= r:
        raise ValueError(f"index k={k} outside [1, {r}]")
    kappa = lam[0] / lam[k - 1]
    if r == 1:
        return BoundReport(1, kappa, 1.0, 1.0, 1.0)
    bound_exp = (1.0 / (1.0 + kappa)) ** (r - 1)
    bound_poly = np.exp(-kappa) / (9.0 * r)
    return BoundReport(r, float(kappa), float(bound_exp), float(bound_poly), float(max(bound_exp, bound_poly)))


def _mc_stat(lam, probe, trials, seed, field, n):
    # probe: index into the basis columns, or -1 for a direction outside span(U)
    r = lam.size
    n = r + 2 if n is None else n
    if n < r + 1:
        raise ValueError("need n > r to have an orthogonal probe")
    if trials < 1000:
        raise ValueError("use at least 1000 trials")
    # the extra column is the probe direction orthogonal to the model's span
    frame = gen_orthonormal_model(n, r + 1, np.ones(r + 1), rnglib.derive_seed(seed, rnglib.MODEL), field).basis
    U, v = frame[:, :r], frame[:, probe if probe >= 0 else r]
    g = rnglib.generator(rnglib.derive_seed(seed, rnglib.SKETCH))
    total = total_sq = 0.0
    done = 0
    while done < trials:
        c = min(CHUNK, trials - done)
        A = rnglib.gaussian(g, (c, n), field)
        B = rnglib.gaussian(g, (c, n), field)
        gap = np.abs(A.conj() @ U) ** 2 @ lam - np.abs(B.conj() @ U) ** 2 @ lam
        stat = np.where(gap > 0, 1.0, -1.0) * (np.abs(A.conj() @ v) ** 2 - np.abs(B.conj() @ v) ** 2)
        total += stat.sum()
        total_sq += (stat**2).sum()
        done += c
    mean = total / trials
    var = max(total_sq / trials - mean**2, 0.0)
    return float(mean), float(np.sqrt(var / (trials - 1)))


def expected_diag_mc(
    lam, k: int = 1, trials: int = 100_000, seed: int = 0, field: str = "complex", n: int | None = None
) -> BoundReport:
    """Monte Carlo u_k^H E[J] u_k alongside the analytic lower bounds."""
    lam = _check_eigs(lam)
    base = alpha_lower_bound(lam, k)
    mean, se = _mc_stat(lam, k - 1, trials, seed, field, n)
    return BoundReport(base.r, base.kappa, base.bound_exp, base.bound_poly, base.alpha, mean, se, trials, field)


def minor_diag_mc(
    lam, trials: int = 100_000, seed: int = 0, field: str = "complex", n: int | None = None
) -> tuple[float, float]:
    """Monte Carlo v^H E[J] v for a unit v orthogonal to the principal subspace."""
    lam = _check_eigs(lam)
    return _mc_stat(lam, -1, trials, seed, field, n)
