"""Bits needed before ESPRIT on the tracked subspace locks onto every tone.

Compares an equal-power close pair with the same pair where one tone is
weaker, over several seeds.
"""

import argparse

import numpy as np

from onebit import rng as rnglib
from onebit.model import gen_toeplitz_vandermonde
from onebit.spectrum import first_hit_index, spectrum_track_run


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--freqs", type=float, nargs="+", default=[0.1, 0.7, 0.725])
    p.add_argument("--weak", type=float, default=0.5, help="power of the last tone in the weak case")
    p.add_argument("--m-max", type=int, default=20_000)
    p.add_argument("--stride", type=int, default=100)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--tol", type=float, default=0.01)
    args = p.parse_args()

    k = len(args.freqs)
    cases = {"equal": [1.0] * k, "weak": [1.0] * (k - 1) + [args.weak]}
    print("case,seed,first_hit")
    medians = {}
    for name, powers in cases.items():
        model = gen_toeplitz_vandermonde(args.n, args.freqs, powers)
        hits = []
        for s in range(args.seeds):
            rows = spectrum_track_run(model, args.m_max, 5, rnglib.derive_seed(12, s), args.stride)
            hits.append(first_hit_index(rows, args.freqs, args.tol))
            print(f"{name},{s},{hits[-1]}")
        medians[name] = float(np.median(hits))
    print(f"# median first hit: {medians}")


if __name__ == "__main__":
    main()
