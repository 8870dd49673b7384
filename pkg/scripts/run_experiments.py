"""Run every config in configs/ and write one CSV per config into results/."""

import argparse
import logging
import time
from pathlib import Path

from onebit.harness import ExperimentConfig, run, write_csv

log = logging.getLogger(__name__)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--configs", default="configs")
    p.add_argument("--out-dir", default="results")
    p.add_argument("--trials", type=int, help="override the trial count of every config")
    p.add_argument("--only", nargs="*", help="config stems to run (default: all)")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for path in sorted(Path(args.configs).glob("*.json")):
        if args.only and path.stem not in args.only:
            continue
        cfg = ExperimentConfig.from_json(path)
        if args.trials is not None:
            cfg.trials = args.trials
        t = time.perf_counter()
        rows = run(cfg)
        write_csv(rows, out / f"{path.stem}.csv")
        log.info("%-24s %4d rows  %6.1fs", path.stem, len(rows), time.perf_counter() - t)


if __name__ == "__main__":
    main()
