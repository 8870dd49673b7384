"""Oracle runs used to pick the thresholds that the acceptance checks freeze.

Prints the quantities behind each calibrated threshold: online vs batch
NMSE under both truncation rules, bit agreement by samples per sensor,
and the NMSE ladder over m.
"""

import argparse

import numpy as np

from onebit.harness import ExperimentConfig, online_trial, run, trial_seeds


def online_vs_batch(trials):
    for order in ("algebraic", "absolute"):
        cfg = ExperimentConfig("online_run", n=40, r=3, r_est=3, m_grid=[5000], trials=trials,
                               tracker_order=order)
        on, ba = [], []
        for seed in trial_seeds(cfg):
            o, b = online_trial(cfg, seed, [5000])
            on.append(o[5000])
            ba.append(b[5000])
        print(f"online({order}) median {np.median(on):.4f}  batch median {np.median(ba):.4f}")


def agreement(trials):
    rows = run(ExperimentConfig("sample_sweep", n=40, r=3, m_grid=[200], T_grid=[10, 100, 1000],
                                trials=trials))
    for r in rows:
        print(f"T={r['T']:5d} agreement median {r['agreement_median']:.4f}")


def ladder(trials):
    rows = run(ExperimentConfig("nmse_vs_m", n=40, r=3, m_grid=[500, 2000, 8000], trials=trials))
    for r in rows:
        print(f"m={r['m']:5d} nmse median {r['nmse_median']:.4f}")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--trials", type=int, default=10)
    args = p.parse_args()
    online_vs_batch(args.trials)
    agreement(args.trials)
    ladder(args.trials)


if __name__ == "__main__":
    main()
