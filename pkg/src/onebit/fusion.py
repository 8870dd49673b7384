"""Batch fusion-center estimators.

``build_surrogate`` forms J = (1/m) sum_i y_i (a_i a_i^H - b_i b_i^H) and
``estimate_subspace`` takes its top-r eigenvectors. ``convex_estimate``
solves the linear program over {Sigma >= 0, ||Sigma||_F <= 1,
||Sigma||_* <= sqrt(r)} exactly by diagonalizing J.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .model import decode_matrix, encode_matrix
from .sensing import BitRecord, BitstreamFormatError, sketch_matrices
from .spectral import check_hermitian, full_eig, top_r_eig


@dataclass(frozen=True)
class Surrogate:
    J: np.ndarray
    m: int


@dataclass(frozen=True)
class SubspaceEstimate:
    basis: np.ndarray  # (n, r) orthonormal
    eigvals: np.ndarray  # (r,) descending

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def r(self) -> int:
        return self.basis.shape[1]

    @property
    def field(self) -> str:
        return "complex" if np.iscomplexobj(self.basis) else "real"

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "field": self.field,
            "eigvals": [float(v) for v in self.eigvals],
            "basis": encode_matrix(self.basis),
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> "SubspaceEstimate":
        if isinstance(doc, str):
            doc = json.loads(doc)
        field = doc.get("field", "real")
        U = decode_matrix(doc["basis"], doc["n"], doc["r"], field)
        return cls(U, np.asarray(doc["eigvals"], dtype=float))


def surrogate_from_arrays(y: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """(1/m) sum y_i (a_i a_i^H - b_i b_i^H) with sketches as rows of A, B."""
    y = np.asarray(y, dtype=float)
    m = len(y)
    J = (A.T * y) @ A.conj() - (B.T * y) @ B.conj()
    J = J / m
    return 0.5 * (J + J.conj().T)


def build_surrogate(bits: list[BitRecord], n: int, field: str = "real") -> Surrogate:
    if not bits:
        raise ValueError("no bits to fuse")
    if n < 1 or field not in ("real", "complex"):
        raise BitstreamFormatError(f"bad dimension/field: n={n}, field={field!r}")
    y = np.array([b.y for b in bits], dtype=float)
    A, B = sketch_matrices([b.sketch_seed for b in bits], n, field)
    return Surrogate(surrogate_from_arrays(y, A, B), len(bits))


def estimate_subspace(S: Surrogate | np.ndarray, r: int) -> SubspaceEstimate:
    J = S.J if isinstance(S, Surrogate) else S
    eig = top_r_eig(J, r)
    order = np.argsort(-eig.values, kind="stable")
    return SubspaceEstimate(eig.vectors[:, order], eig.values[order])


def capped_simplex_direction(d: np.ndarray, r: float, tol: float = 1e-10) -> np.ndarray:
    """argmax <d, s> over s >= 0, ||s||_2 <= 1, ||s||_1 <= sqrt(r).

    The maximizer has the form (d - theta)_+ / ||(d - theta)_+||_2; theta is
    zero when the l1 cap is slack and otherwise found by bisection, using
    that the l1/l2 ratio of (d - theta)_+ decreases in theta.
    """
    d = np.asarray(d, dtype=float)
    cap = np.sqrt(r)
    s = np.zeros_like(d)
    top = d.max(initial=0.0)
    if top <= 0:
        return s
    # the maximizer is scale free; normalizing keeps tiny inputs from underflowing
    d = d / top
    top = 1.0
    ties = d >= top - tol
    k = int(ties.sum())
    if k > r:
        # l2 cap inactive: spread the l1 budget over the tied maxima
        s[ties] = cap / k
        return s

    def shaped(theta):
        v = np.clip(d - theta, 0.0, None)
        return v / np.linalg.norm(v)

    s = shaped(0.0)
    if s.sum() <= cap:
        return s
    lo, hi = 0.0, top
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid >= top or shaped(mid).sum() < cap:
            hi = mid
        else:
            lo = mid
    s = shaped(lo)
    return s * min(1.0, cap / s.sum())


def convex_estimate(
    bits: list[BitRecord] | Surrogate | np.ndarray, n: int, r: int, field: str = "real"
) -> tuple[np.ndarray, SubspaceEstimate]:
    """Exact maximizer of sum_i y_i <W_i, Sigma> over the PSD low-rank ball."""
    if isinstance(bits, Surrogate):
        J = bits.J
    elif isinstance(bits, np.ndarray):
        J = check_hermitian(bits)
    else:
        J = build_surrogate(bits, n, field).J
    if not 1 <= r <= J.shape[0]:
        raise ValueError(f"rank r={r} outside [1, {J.shape[0]}]")
    eig = full_eig(J)
    # algebraic order; zero weights then keep J's ranking as tie-break
    order = np.argsort(-eig.values, kind="stable")
    d, V = eig.values[order], eig.vectors[:, order]
    sigma = capped_simplex_direction(d, r)
    Sigma = (V * sigma[None, :]) @ V.conj().T
    Sigma = 0.5 * (Sigma + Sigma.conj().T)
    keep = np.argsort(-sigma, kind="stable")[:r]
    return Sigma, SubspaceEstimate(V[:, keep], sigma[keep])
