"""Dense Hermitian eigendecomposition and orthonormalization helpers.

Everything here is a pure function of its inputs. Eigenvalues come back
sorted by descending absolute value; callers that want the algebraically
largest pairs use :func:`top_r_eig`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_RTOL = 1e-12
DROP_TOL = 1e-10


class SymmetryError(ValueError):
    """Input matrix is not symmetric (Hermitian) within tolerance."""


@dataclass(frozen=True)
class EigPair:
    values: np.ndarray  # (k,) real
    vectors: np.ndarray  # (n, k), orthonormal columns

    @property
    def k(self) -> int:
        return self.values.shape[0]


def check_hermitian(M: np.ndarray, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SymmetryError(f"expected a square matrix, got shape {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    gap = np.max(np.abs(M - M.conj().T)) if M.size else 0.0
    if gap > rtol * scale:
        raise SymmetryError(f"asymmetry {gap:.3e} exceeds {rtol:.0e} x {scale:.3e}")
    return M


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of every column becomes real and positive
    if V.shape[1] == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    pivots = V[idx, np.arange(V.shape[1])]
    mags = np.abs(pivots)
    phase = np.where(mags > 0, pivots / np.where(mags > 0, mags, 1.0), 1.0)
    return V * np.conj(phase)[None, :]


def _hermitian_eigh(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    M = check_hermitian(M)
    H = 0.5 * (M + M.conj().T)
    w, V = np.linalg.eigh(H)
    return w, V


def full_eig(M: np.ndarray) -> EigPair:
    """All eigenpairs of a symmetric/Hermitian matrix, |value| descending."""
    w, V = _hermitian_eigh(M)
    order = np.argsort(-np.abs(w), kind="stable")
    return EigPair(w[order], _fix_signs(V[:, order]))


def top_r_eig(M: np.ndarray, r: int) -> EigPair:
    """The r eigenpairs with the largest algebraic eigenvalues.

    The selected pairs are returned in |value|-descending order so that
    ``top_r_eig(M, n)`` coincides with ``full_eig(M)``.
    """
    n = np.shape(M)[0]
    if not 1 <= r <= n:
        raise ValueError(f"rank r={r} outside [1, {n}]")
    w, V = _hermitian_eigh(M)
    w, V = w[n - r:], V[:, n - r:]
    order = np.argsort(-np.abs(w), kind="stable")
    return EigPair(w[order], _fix_signs(V[:, order]))


def orthonormalize(B: np.ndarray, tol: float = DROP_TOL) -> np.ndarray:
    """Orthonormal basis for span(B) via Gram-Schmidt with one re-pass.

    A column is dropped when its residual after projecting out the kept
    columns is below ``tol * (||column|| + 1)``.
    """
    B = np.asarray(B)
    if B.ndim == 1:
        B = B[:, None]
    n, k = B.shape
    dtype = np.result_type(B.dtype, np.float64)
    Q = np.zeros((n, 0), dtype=dtype)
    for j in range(k):
        col = B[:, j].astype(dtype)
        norm0 = np.linalg.norm(col)
        v = col
        for _ in range(2):
            v = v - Q @ (Q.conj().T @ v)
        res = np.linalg.norm(v)
        if res < tol * (norm0 + 1.0):
            continue
        Q = np.column_stack([Q, v / res])
    return Q
