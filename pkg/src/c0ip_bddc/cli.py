"""Command-line driver: ``c0ip-bddc --table 1`` etc."""

from __future__ import annotations

import argparse
import logging
import sys

from .bench import DEFAULT_SWEEP, RHS_MODES, ExperimentConfig, emit, mms_convergence, run_table
from .errors import InvalidParameterError

EXIT_OK, EXIT_ERROR, EXIT_EMPTY = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="c0ip-bddc",
        description="BDDC-preconditioned C0 interior penalty biharmonic benchmarks on the unit square.",
    )
    p.add_argument("--n", type=int, nargs="+", default=list(DEFAULT_SWEEP),
                   help="elements per side (sweep); default 8 12 16 20 24")
    p.add_argument("--m", type=int, default=4, help="subdomains per side (default 4)")
    p.add_argument("--eta", type=float, default=5.0, help="penalty parameter (default 5)")
    p.add_argument("--tol", type=float, default=1e-6, help="relative residual tolerance")
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--table", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--mms", action="store_true",
                   help="run the manufactured-solution convergence study instead of a table")
    p.add_argument("--rhs", choices=RHS_MODES, default="unit",
                   help="table 3 right-hand side: unit load f=1, mms load, seeded random "
                        "vector, or ones (b = A_h times the all-ones vector)")
    p.add_argument("--seed", type=int, default=20180101)
    p.add_argument("--format", choices=("csv", "md", "json"), default="csv")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--timings", action="store_true",
                   help="fill wall_time_s (makes output non-reproducible)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.mms:
            rows = mms_convergence(tuple(args.n) if args.n != list(DEFAULT_SWEEP) else (8, 16, 24),
                                   args.eta)
        else:
            config = ExperimentConfig(n=tuple(args.n), m=args.m, eta=args.eta, tol=args.tol,
                                      max_iter=args.max_iter, table=args.table, rhs=args.rhs,
                                      seed=args.seed, timings=args.timings)
            rows = run_table(config)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except Exception as exc:  # solver or construction failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not rows:
        print("no rows", file=sys.stderr)
        return EXIT_EMPTY
    try:
        emit(rows, args.format, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
