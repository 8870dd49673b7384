"""Ground-truth low-rank covariance models and Gaussian sample streams."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import rng as rnglib
from .spectral import full_eig, orthonormalize


@dataclass(frozen=True)
class CovarianceModel:
    """Sigma = U diag(eigvals) U^H stored in factored form."""

    basis: np.ndarray  # (n, r), orthonormal columns
    eigvals: np.ndarray  # (r,), positive, descending
    field: str = "real"
    freqs: tuple[float, ...] | None = None
    powers: tuple[float, ...] | None = None

    def __post_init__(self):
        U = np.asarray(self.basis)
        lam = np.asarray(self.eigvals, dtype=float)
        if U.ndim != 2 or lam.shape != (U.shape[1],):
            raise ValueError(f"basis {U.shape} and eigvals {lam.shape} disagree")
        if np.any(lam <= 0) or np.any(np.diff(lam) > 0):
            raise ValueError("eigvals must be positive and descending")
        if self.field not in ("real", "complex"):
            raise ValueError(f"unknown field {self.field!r}")
        object.__setattr__(self, "basis", U)
        object.__setattr__(self, "eigvals", lam)

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def r(self) -> int:
        return self.basis.shape[1]

    @property
    def factor(self) -> np.ndarray:
        """X = U diag(sqrt(lambda)), so that Sigma = X X^H."""
        return self.basis * np.sqrt(self.eigvals)[None, :]

    def covariance(self) -> np.ndarray:
        X = self.factor
        return X @ X.conj().T

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "field": self.field,
            "eigvals": [float(v) for v in self.eigvals],
            "basis": encode_matrix(self.basis),
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> "CovarianceModel":
        if isinstance(doc, str):
            doc = json.loads(doc)
        U = decode_matrix(doc["basis"], doc["n"], doc["r"], doc["field"])
        return cls(U, np.asarray(doc["eigvals"], dtype=float), doc["field"])


def encode_matrix(M: np.ndarray) -> list[list[float]]:
    """Row-major list of [re, im] pairs."""
    flat = np.asarray(M).reshape(-1)
    return [[float(np.real(z)), float(np.imag(z))] for z in flat]


def decode_matrix(pairs, rows: int, cols: int, field: str) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float).reshape(rows, cols, 2)
    if field == "complex":
        return arr[..., 0] + 1j * arr[..., 1]
    return arr[..., 0].copy()


def _from_gram(X: np.ndarray, field: str) -> tuple[np.ndarray, np.ndarray]:
    # EVD of X X^H through the small r x r Gram matrix
    r = X.shape[1]
    eig = full_eig(X.conj().T @ X)
    lam = eig.values[:r]
    U = X @ eig.vectors[:, :r] / np.sqrt(lam)[None, :]
    U = orthonormalize(U)
    return U, lam


def gen_random_lowrank(n: int, r: int, seed: int, field: str = "real") -> CovarianceModel:
    """Sigma = X X^T with X an n x r standard Gaussian matrix."""
    if not 1 <= r <= n:
        raise ValueError(f"rank r={r} outside [1, {n}]")
    X = rnglib.gaussian(rnglib.generator(seed), (n, r), field)
    U, lam = _from_gram(X, field)
    return CovarianceModel(U, lam, field)


def gen_orthonormal_model(n: int, r: int, eigvals, seed: int, field: str = "real") -> CovarianceModel:
    """Random orthonormal basis (orthonormalized Gaussian) with given eigenvalues."""
    lam = np.asarray(eigvals, dtype=float)
    if lam.shape != (r,) or not 1 <= r <= n:
        raise ValueError(f"need {r} eigenvalues with 1 <= r <= n={n}")
    G = rnglib.gaussian(rnglib.generator(seed), (n, r), field)
    Q, R = np.linalg.qr(G)
    # fix the QR sign ambiguity so the draw is Haar
    d = np.diag(R)
    Q = Q * (d / np.abs(d)).conj()[None, :]
    return CovarianceModel(Q, lam, field)


def vandermonde(n: int, freqs) -> np.ndarray:
    """Unit-norm columns exp(2 pi i j f_k) / sqrt(n), j = 0..n-1."""
    f = np.asarray(freqs, dtype=float)
    j = np.arange(n)[:, None]
    return np.exp(2j * np.pi * j * f[None, :]) / np.sqrt(n)


def gen_toeplitz_vandermonde(n: int, freqs, powers) -> CovarianceModel:
    """Hermitian Toeplitz PSD model Sigma = V diag(powers) V^H, stored via its EVD."""
    f = np.mod(np.asarray(freqs, dtype=float), 1.0)
    p = np.asarray(powers, dtype=float)
    r = f.shape[0]
    if p.shape != (r,) or not 1 <= r <= n:
        raise ValueError("freqs and powers must have equal length r <= n")
    if np.any(p <= 0):
        raise ValueError("powers must be positive")
    if len(np.unique(f)) != r:
        raise ValueError("duplicate frequencies")
    X = vandermonde(n, f) * np.sqrt(p)[None, :]
    U, lam = _from_gram(X, "complex")
    return CovarianceModel(U, lam, "complex", tuple(float(v) for v in f), tuple(float(v) for v in p))


@dataclass
class SampleStream:
    """x_t = U (sqrt(lambda) * g_t) + sigma * w_t, i.i.d. over t."""

    model: CovarianceModel
    noise_var: float = 0.0
    rng_seed: int = 0
    _rng: np.random.Generator = dc_field(init=False, repr=False)

    def __post_init__(self):
        if self.noise_var < 0:
            raise ValueError("noise variance must be nonnegative")
        self._rng = rnglib.generator(self.rng_seed)

    def draw(self, count: int) -> np.ndarray:
        """``count`` samples as rows of a (count, n) array."""
        m = self.model
        g = rnglib.gaussian(self._rng, (count, m.r), m.field)
        x = (g * np.sqrt(m.eigvals)[None, :]) @ m.basis.T
        if self.noise_var > 0:
            x = x + np.sqrt(self.noise_var) * rnglib.gaussian(self._rng, (count, m.n), m.field)
        return x


def draw_sample(stream: SampleStream) -> np.ndarray:
    return stream.draw(1)[0]
