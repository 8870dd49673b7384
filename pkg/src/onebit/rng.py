"""Seed derivation. All randomness flows from 64-bit integer seeds."""

from __future__ import annotations

import numpy as np

# spawn keys used when splitting a trial seed into independent streams
MODEL, SKETCH, FLIP, SAMPLES, TRACK = range(5)


def derive_seed(*keys: int) -> int:
    """Deterministic 64-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def derive_seeds(count: int, *keys: int) -> np.ndarray:
    """``count`` 64-bit seeds; a longer request extends a shorter one."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return ss.generate_state(count, np.uint64)


def generator(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed))


def gaussian(rng: np.random.Generator, size, field: str = "real") -> np.ndarray:
    """Standard Gaussian draws; complex mode is circular with E|z|^2 = 1."""
    if field == "real":
        return rng.standard_normal(size)
    if field == "complex":
        return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0)
    raise ValueError(f"unknown field {field!r}")
