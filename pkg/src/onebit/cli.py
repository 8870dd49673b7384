"""Command line entry point: ``onebit <experiment|gen-bits|estimate> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import rng as rnglib
from .fusion import build_surrogate, estimate_subspace
from .harness import EXPERIMENTS, ExperimentConfig, run, write_csv
from .model import CovarianceModel, gen_random_lowrank, gen_toeplitz_vandermonde
from .sensing import (
    flip_channel,
    make_bits,
    population_bits,
    read_bitstream,
    sketch_matrices,
    write_bitstream,
)

log = logging.getLogger("onebit")


def _experiment(args) -> int:
    doc = json.loads(Path(args.config).read_text()) if args.config else {}
    doc["experiment"] = args.command
    if args.trials is not None:
        doc["trials"] = args.trials
    if args.seed is not None:
        doc["root_seed"] = args.seed
    if args.out is not None:
        doc["output_path"] = args.out
    cfg = ExperimentConfig.from_json(doc)
    rows = run(cfg)
    text = write_csv(rows, cfg.output_path)
    if cfg.output_path is None:
        sys.stdout.write(text)
    else:
        log.info("wrote %d rows to %s", len(rows), cfg.output_path)
    return 0


def _gen_bits(args) -> int:
    if args.model:
        model = CovarianceModel.from_json(Path(args.model).read_text())
    elif args.freqs:
        powers = args.powers or [1.0] * len(args.freqs)
        model = gen_toeplitz_vandermonde(args.n, args.freqs, powers)
    else:
        model = gen_random_lowrank(args.n, args.r, rnglib.derive_seed(args.seed, rnglib.MODEL), args.field)
    if args.save_model:
        Path(args.save_model).write_text(json.dumps(model.to_json()))
    seeds = rnglib.derive_seeds(args.m, args.seed, rnglib.SKETCH)
    A, B = sketch_matrices(seeds, model.n, model.field)
    bits = make_bits(population_bits(A, B, model), seeds)
    if args.eps > 0:
        bits = flip_channel(bits, args.eps, rnglib.derive_seed(args.seed, rnglib.FLIP))
    write_bitstream(bits, model.n, model.field, args.out if args.out else sys.stdout)
    return 0


def _estimate(args) -> int:
    n, field, bits = read_bitstream(args.bits)
    est = estimate_subspace(build_surrogate(bits, n, field), args.rank)
    json.dump(est.to_json(), sys.stdout)
    sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="onebit", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    for name in EXPERIMENTS:
        e = sub.add_parser(name, help=f"run the {name} experiment and emit CSV")
        e.add_argument("--config", help="JSON file with ExperimentConfig fields")
        e.add_argument("--trials", type=int)
        e.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
        e.add_argument("--out", help="CSV path (default: stdout)")
        e.set_defaults(func=_experiment)

    g = sub.add_parser("gen-bits", help="simulate sensors and write a bitstream file")
    g.add_argument("--n", type=int, default=40)
    g.add_argument("--r", type=int, default=3)
    g.add_argument("--m", type=int, default=2000)
    g.add_argument("--field", choices=("real", "complex"), default="real")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--eps", type=float, default=0.0, help="flip probability")
    g.add_argument("--model", help="ground-truth model JSON to sketch")
    g.add_argument("--freqs", type=float, nargs="+", help="Toeplitz model frequencies")
    g.add_argument("--powers", type=float, nargs="+")
    g.add_argument("--save-model", help="write the ground-truth model JSON here")
    g.add_argument("--out", help="bitstream path (default: stdout)")
    g.set_defaults(func=_gen_bits)

    s = sub.add_parser("estimate", help="truncated-EVD estimate from a bitstream file")
    s.add_argument("--bits", required=True)
    s.add_argument("--rank", type=int, required=True)
    s.set_defaults(func=_estimate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
