"""Command-line interface: ``mislab run`` and ``mislab validate``."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .experiments import (
    SCHEMES,
    get_example,
    load_config,
    print_table,
    run_experiment_detailed,
    write_csv,
    write_runs_csv,
)
from .validate import run_validation


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mislab",
        description=(
            "Multiple importance sampling laboratory: run MSE comparison "
            "experiments across weighting schemes, or validate invariants."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and report summary rows")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--example", choices=("1", "2"), help="builtin experiment")
    src.add_argument("--config", help="path to a TOML experiment config")
    run.add_argument("--runs", type=int, help="override replications per cell")
    run.add_argument("--seed", type=int, help="override the base seed")
    run.add_argument("--out", help="write summary rows to this CSV path")
    run.add_argument(
        "--schemes",
        help=f"comma-separated subset of {','.join(SCHEMES)}",
    )
    run.add_argument("--alpha", type=float, help="override the clustered fraction")
    run.add_argument(
        "--p", help="comma-separated subset sizes P for the partition schemes"
    )
    run.add_argument(
        "--dump-runs", help="write every per-run record to this CSV path"
    )

    val = sub.add_parser("validate", help="run the invariant checks")
    val.add_argument("--example", choices=("1", "2"), required=True)
    return parser


def _apply_overrides(cfg, args):
    updates = {}
    if args.runs is not None:
        updates["n_runs"] = args.runs
    if args.seed is not None:
        updates["base_seed"] = args.seed
    if args.alpha is not None:
        updates["alpha"] = args.alpha
    if args.schemes:
        updates["schemes"] = tuple(s.strip() for s in args.schemes.split(","))
    if args.p:
        updates["p_values"] = tuple(int(p) for p in args.p.split(","))
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "validate":
        return 0 if run_validation(args.example) else 1

    cfg = get_example(args.example) if args.example else load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    rows, runs = run_experiment_detailed(cfg)
    print_table(rows)
    if args.out:
        write_csv(rows, args.out)
        print(f"wrote {len(rows)} summary rows to {args.out}", file=sys.stderr)
    if args.dump_runs:
        write_runs_csv(runs, args.dump_runs)
        print(f"wrote {len(runs)} run records to {args.dump_runs}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
