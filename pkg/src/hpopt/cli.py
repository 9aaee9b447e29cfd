"""Command line entry point: ``hpopt run | selfcheck | version``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .bench import RunConfig, RunFailure, run_comparison
from .errors import ConfigurationError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _csv_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _float_list(text):
    try:
        return [float(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hpopt", description="Seeded optimizer comparisons.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="compare optimizers on a benchmark objective")
    run.add_argument("--objective", choices=("branin", "noise"), default="branin")
    run.add_argument("--noise-dim", type=int, default=3)
    run.add_argument("--noise-variance", type=_float_list, default=[0.01],
                     help="smoothing variance; a comma separated list runs a sweep")
    run.add_argument("--grid-points", type=int, default=None)
    run.add_argument("--optimizers", type=_csv_list, default=["random", "bayes"])
    run.add_argument("--steps", type=int, default=30)
    run.add_argument("--seeds", type=int, default=1)
    run.add_argument("--shared-initial", type=int, default=10)
    run.add_argument("--zeta", type=float, default=0.0)
    run.add_argument("--kernel", choices=("matern52", "rbf"), default="matern52")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--seed", type=int, default=0, help="base seed")

    sub.add_parser("selfcheck", help="run the built-in oracle checks")
    sub.add_parser("version", help="print the version")
    return parser


def _run(args) -> int:
    variances = args.noise_variance if args.objective == "noise" else [args.noise_variance[0]]
    sweep = len(variances) > 1
    for v in variances:
        out = args.out
        if out and sweep:
            out = f"{out}/variance_{v:g}"
        config = RunConfig(
            objective=args.objective, optimizers=tuple(args.optimizers), steps=args.steps,
            seeds=args.seeds, base_seed=args.seed, shared_initial=args.shared_initial,
            zeta=args.zeta, kernel=args.kernel, noise_dim=args.noise_dim,
            noise_variance=v, grid_points=args.grid_points, out_dir=out,
        )
        result = run_comparison(config)
        label = f"{args.objective}" + (f" variance={v:g}" if args.objective == "noise" else "")
        for name in config.optimizers:
            final = result.final_best(name)
            print(f"{label} {name}: mean final best {final.mean():.6g} "
                  f"(median {np.median(final):.6g}, {len(final)} seeds)")
    return EXIT_OK


def _selfcheck() -> int:
    from .selfcheck import run_all

    ok = True
    for name, passed, detail in run_all():
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_NUMERICAL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    if args.command == "selfcheck":
        return _selfcheck()
    try:
        return _run(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RunFailure, NumericalError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
