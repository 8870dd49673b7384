"""Online principal-subspace tracking with O(n r) memory.

Each arriving bit is the rank-two update

    J_m = eta_m J_{m-1} + K_m diag(y/m, -y/m) K_m^H,   K_m = [a_m, b_m],

folded into the tracked eigendecomposition U diag(pi) U^H through a small
(r'+2) x (r'+2) eigenproblem, after which only r_est components are kept.

Which components survive is set by ``order``. "algebraic" (default) keeps
the largest eigenvalues; "absolute" keeps the largest in magnitude. The
expected surrogate is PSD, so negative directions are noise; under the
absolute rule they can evict a signal direction early on, and a single
O(n/m) increment is never large enough to bring it back.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .fusion import SubspaceEstimate
from .model import decode_matrix, encode_matrix
from .sensing import BitRecord, sketch_pair
from .spectral import full_eig, orthonormalize

REORTH_EVERY = 256


@dataclass(frozen=True)
class TrackerState:
    n: int
    r_est: int
    basis: np.ndarray  # (n, k), k <= r_est
    eigvals: np.ndarray  # (k,), |.| descending
    m: int = 0
    field: str = "real"
    discount: float = 1.0  # multiplies eta_m; 1.0 is the plain running mean
    order: str = "algebraic"  # truncation rule: "algebraic" | "absolute"

    @property
    def columns(self) -> int:
        return self.basis.shape[1]

    def implied_matrix(self) -> np.ndarray:
        """U diag(pi) U^H; for tests only, it is n x n."""
        return (self.basis * self.eigvals[None, :]) @ self.basis.conj().T

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "r_est": self.r_est,
            "m": self.m,
            "field": self.field,
            "k": self.columns,
            "discount": self.discount,
            "order": self.order,
            "eigvals": [float(v) for v in self.eigvals],
            "basis": encode_matrix(self.basis),
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> "TrackerState":
        if isinstance(doc, str):
            doc = json.loads(doc)
        eigvals = np.asarray(doc["eigvals"], dtype=float)
        k = doc.get("k", len(eigvals))
        U = decode_matrix(doc["basis"], doc["n"], k, doc.get("field", "real"))
        return cls(
            doc["n"], doc["r_est"], U, eigvals, doc["m"], doc.get("field", "real"),
            doc.get("discount", 1.0), doc.get("order", "algebraic"),
        )


def tracker_init(
    n: int, r_est: int, field: str = "real", discount: float = 1.0, order: str = "algebraic"
) -> TrackerState:
    if not 1 <= r_est <= n - 2:
        raise ValueError(f"r_est={r_est} must lie in [1, n-2] = [1, {n - 2}]")
    if not 0.0 < discount <= 1.0:
        raise ValueError("discount must lie in (0, 1]")
    if order not in ("algebraic", "absolute"):
        raise ValueError(f"unknown truncation order {order!r}")
    dtype = complex if field == "complex" else float
    return TrackerState(n, r_est, np.zeros((n, 0), dtype=dtype), np.zeros(0), 0, field, discount, order)


def _reorthonormalize(U: np.ndarray, pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # U diag(pi) U^H = Q (R diag(pi) R^H) Q^H, then re-diagonalize the core
    Q, R = np.linalg.qr(U)
    core = (R * pi[None, :]) @ R.conj().T
    eig = full_eig(0.5 * (core + core.conj().T))
    return Q @ eig.vectors, eig.values


def rank_two_update(
    state: TrackerState, a: np.ndarray, b: np.ndarray, y: int
) -> TrackerState:
    if np.shape(a) != (state.n,) or np.shape(b) != (state.n,):
        raise ValueError(f"sketch dimension mismatch: expected ({state.n},)")
    m = state.m + 1
    eta = state.discount * (m - 1) / m
    U, pi = state.basis, state.eigvals
    K = np.column_stack([a, b]).astype(U.dtype)
    lam = np.array([y / m, -y / m])

    C = U.conj().T @ K  # (k, 2)
    R = K - U @ C
    P = orthonormalize(R)
    Bblk = np.vstack([C, P.conj().T @ R])  # (k + p, 2)

    k, p = U.shape[1], P.shape[1]
    Gamma = np.zeros((k + p, k + p), dtype=Bblk.dtype)
    Gamma[:k, :k] = np.diag(eta * pi)
    Gamma += (Bblk * lam[None, :]) @ Bblk.conj().T
    Gamma = 0.5 * (Gamma + Gamma.conj().T)

    eig = full_eig(Gamma)  # |value| descending
    keep = min(state.r_est, k + p)
    if state.order == "algebraic":
        sel = np.sort(np.argsort(-eig.values, kind="stable")[:keep])
    else:
        sel = np.arange(keep)
    new_U = np.hstack([U, P]) @ eig.vectors[:, sel]
    new_pi = eig.values[sel]

    if m % REORTH_EVERY == 0:
        new_U, new_pi = _reorthonormalize(new_U, new_pi)
    return replace(state, basis=new_U, eigvals=new_pi, m=m)


def tracker_update(state: TrackerState, bit: BitRecord) -> TrackerState:
    pair = sketch_pair(state.n, bit.sketch_seed, state.field)
    return rank_two_update(state, pair.a, pair.b, bit.y)


def tracker_run(state: TrackerState, bits: Iterable[BitRecord]) -> TrackerState:
    for bit in bits:
        state = tracker_update(state, bit)
    return state


def tracker_subspace(state: TrackerState, r: int) -> SubspaceEstimate:
    """The r tracked directions with the largest algebraic eigenvalues."""
    if state.columns == 0:
        raise ValueError("tracker holds no directions yet")
    if not 1 <= r <= state.columns:
        raise ValueError(f"r={r} outside [1, {state.columns}]")
    order = np.argsort(-state.eigvals, kind="stable")[:r]
    return SubspaceEstimate(state.basis[:, order], state.eigvals[order])
