"""Distributed one-bit sensors.

Each sensor holds a pair of Gaussian sketch vectors (a, b), averages the
energies |<a, x>|^2 and |<b, x>|^2 over the samples it sees and reports
a single comparison bit. Sketch pairs travel as seeds.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from . import rng as rnglib
from .model import CovarianceModel, SampleStream

HEADER_TAG = "#onebit-v1"


class BitstreamFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SketchPair:
    a: np.ndarray
    b: np.ndarray
    seed: int


def sketch_pair(n: int, seed: int, field: str = "real") -> SketchPair:
    g = rnglib.generator(seed)
    a = rnglib.gaussian(g, n, field)
    b = rnglib.gaussian(g, n, field)
    return SketchPair(a, b, int(seed))


def sketch_matrices(seeds, n: int, field: str = "real") -> tuple[np.ndarray, np.ndarray]:
    """Stack the pairs for many seeds into (m, n) arrays A and B."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    dtype = complex if field == "complex" else float
    A = np.empty((len(seeds), n), dtype=dtype)
    B = np.empty((len(seeds), n), dtype=dtype)
    for i, s in enumerate(seeds):
        p = sketch_pair(n, int(s), field)
        A[i], B[i] = p.a, p.b
    return A, B


@dataclass(frozen=True)
class SensorState:
    pair: SketchPair
    acc_a: float = 0.0
    acc_b: float = 0.0
    count: int = 0


@dataclass(frozen=True)
class BitRecord:
    y: int
    sketch_seed: int
    sensor_id: int

    def __post_init__(self):
        if self.y not in (-1, 1):
            raise ValueError(f"bit must be +1 or -1, got {self.y}")


def new_sensor(n: int, seed: int, field: str = "real") -> SensorState:
    return SensorState(sketch_pair(n, seed, field))


def ingest(state: SensorState, x: np.ndarray) -> SensorState:
    """Fold one sample into the running energy averages."""
    x = np.asarray(x)
    if x.shape != state.pair.a.shape:
        raise ValueError(f"sample shape {x.shape} != sketch shape {state.pair.a.shape}")
    u = abs(np.vdot(state.pair.a, x)) ** 2
    v = abs(np.vdot(state.pair.b, x)) ** 2
    T = state.count + 1
    return replace(
        state,
        acc_a=((T - 1) * state.acc_a + u) / T,
        acc_b=((T - 1) * state.acc_b + v) / T,
        count=T,
    )


def emit_bit(state: SensorState, sensor_id: int = 0) -> BitRecord:
    if state.count == 0:
        raise ValueError("sensor has not seen any samples")
    y = 1 if state.acc_a > state.acc_b else -1
    return BitRecord(y, state.pair.seed, sensor_id)


def _sign(z) -> np.ndarray:
    # ties go to -1
    return np.where(np.asarray(z) > 0, 1, -1)


def projected_energy(vectors: np.ndarray, model: CovarianceModel) -> np.ndarray:
    """v^H Sigma v for each row v, as ||sqrt(Lambda) U^H v||^2."""
    proj = np.atleast_2d(vectors).conj() @ model.basis
    return np.sum(np.abs(proj) ** 2 * model.eigvals[None, :], axis=1)


def energy_gap(pair: SketchPair, target) -> float:
    """<W, Sigma> for a model, or <W, sample covariance> for a (T, n) sample array."""
    if isinstance(target, CovarianceModel):
        return float(projected_energy(pair.a, target)[0] - projected_energy(pair.b, target)[0])
    X = np.atleast_2d(np.asarray(target))
    return float(np.mean(np.abs(X @ pair.a.conj()) ** 2) - np.mean(np.abs(X @ pair.b.conj()) ** 2))


def population_bit(pair: SketchPair, model: CovarianceModel) -> int:
    return int(_sign(energy_gap(pair, model)))


def population_bits(A: np.ndarray, B: np.ndarray, model: CovarianceModel) -> np.ndarray:
    return _sign(projected_energy(A, model) - projected_energy(B, model))


def sample_bits(A: np.ndarray, B: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Bits of sensors that all average over the same samples (rows of X)."""
    ua = np.mean(np.abs(A.conj() @ X.T) ** 2, axis=1)
    ub = np.mean(np.abs(B.conj() @ X.T) ** 2, axis=1)
    return _sign(ua - ub)


def make_bits(ys, seeds) -> list[BitRecord]:
    return [BitRecord(int(y), int(s), i) for i, (y, s) in enumerate(zip(ys, seeds))]


def flip_channel(bits: list[BitRecord], eps: float, seed: int) -> list[BitRecord]:
    """Negate each bit independently with probability eps."""
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"flip probability {eps} outside [0, 1/2]")
    u = rnglib.generator(seed).random(len(bits))
    return [replace(b, y=-b.y) if flip else b for b, flip in zip(bits, u < eps)]


def flip_array(y: np.ndarray, eps: float, seed: int) -> np.ndarray:
    """Array form of :func:`flip_channel`; same draws, same flips."""
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"flip probability {eps} outside [0, 1/2]")
    u = rnglib.generator(seed).random(len(y))
    return np.where(u < eps, -y, y)


def bit_agreement_rate(
    model: CovarianceModel,
    m: int,
    T: int,
    noise_var: float = 0.0,
    shared_samples: bool = True,
    seed: int = 0,
) -> float:
    """Fraction of m sensors whose T-sample bit equals the population bit."""
    if m < 1 or T < 1:
        raise ValueError("need m >= 1 and T >= 1")
    seeds = rnglib.derive_seeds(m, seed, rnglib.SKETCH)
    A, B = sketch_matrices(seeds, model.n, model.field)
    truth = population_bits(A, B, model)
    if shared_samples:
        X = SampleStream(model, noise_var, rnglib.derive_seed(seed, rnglib.SAMPLES)).draw(T)
        got = sample_bits(A, B, X)
    else:
        got = np.empty(m, dtype=int)
        for i in range(m):
            stream = SampleStream(model, noise_var, rnglib.derive_seed(seed, rnglib.SAMPLES, i))
            got[i] = sample_bits(A[i:i + 1], B[i:i + 1], stream.draw(T))[0]
    return float(np.mean(got == truth))


# -- bitstream wire format -------------------------------------------------

def write_bitstream(bits: Iterable[BitRecord], n: int, field: str, dest: str | Path | TextIO) -> None:
    lines = [f"{HEADER_TAG} n={n} field={field}"]
    lines += [f"{b.sensor_id}\t{'+1' if b.y > 0 else '-1'}\t{int(b.sketch_seed)}" for b in bits]
    text = "\n".join(lines) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    else:
        dest.write(text)


def parse_header(line: str) -> tuple[int, str]:
    parts = line.strip().split()
    if not parts or parts[0] != HEADER_TAG:
        raise BitstreamFormatError(f"bad header line: {line!r}")
    kv = dict(p.split("=", 1) for p in parts[1:] if "=" in p)
    try:
        n, field = int(kv["n"]), kv["field"]
    except (KeyError, ValueError) as exc:
        raise BitstreamFormatError(f"header missing n/field: {line!r}") from exc
    if field not in ("real", "complex") or n < 1:
        raise BitstreamFormatError(f"bad header values: {line!r}")
    return n, field


def iter_bitstream(src: TextIO) -> Iterator[BitRecord]:
    """Yield records one line at a time; the header must already be consumed."""
    for lineno, line in enumerate(src, start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3 or fields[1] not in ("+1", "-1"):
            raise BitstreamFormatError(f"line {lineno}: malformed record {line!r}")
        try:
            sid, seed = int(fields[0]), int(fields[2])
        except ValueError as exc:
            raise BitstreamFormatError(f"line {lineno}: {exc}") from exc
        if not 0 <= seed < 2**64:
            raise BitstreamFormatError(f"line {lineno}: seed out of 64-bit range")
        yield BitRecord(int(fields[1]), seed, sid)


def read_bitstream(src: str | Path | TextIO) -> tuple[int, str, list[BitRecord]]:
    if isinstance(src, (str, Path)):
        src = io.StringIO(Path(src).read_text())
    n, field = parse_header(src.readline())
    return n, field, list(iter_bitstream(src))
