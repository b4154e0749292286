"""Command-line front end.

Subcommands mirror the pipeline stages (gen-data, train, bound, baseline,
sweep, run) plus a quick self-check (verify).  Flags override config keys;
--seed sets the master seed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .certify import PipelineStageError, run_pipeline, verify_invariants
from .config import ConfigError, load_config

STAGE_COMMANDS = {
    "gen-data": ("gen-data",),
    "train": ("gen-data", "train"),
    "bound": ("bound",),
    "baseline": ("bound", "baseline"),
    "sweep": ("sweep",),
    "run": ("gen-data", "train", "bound", "baseline", "sweep"),
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("-c", "--config", required=True, help="run-config file (INI)")
    sub.add_argument("--seed", type=int, default=None, help="master seed override")
    sub.add_argument("--output", default=None, help="output directory override")
    sub.add_argument("--restarts", type=int, default=None, help="solver restart override")
    sub.add_argument("--epochs", type=int, default=None, help="training epoch override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pofbounds",
        description="Optimal probability-of-failure bounds from partial distribution information",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name in STAGE_COMMANDS:
        sub = commands.add_parser(name, help=f"run the {name} stage(s)")
        _add_common(sub)
    commands.add_parser("verify", help="run the built-in invariant checks")
    return parser


def _apply_overrides(config, args):
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.output is not None:
        config = replace(config, output=args.output)
    if args.restarts is not None:
        config = replace(config, solver=replace(config.solver, restarts=args.restarts))
    if args.epochs is not None:
        config = replace(config, surrogate=replace(config.surrogate, epochs=args.epochs))
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        checks = verify_invariants()
        ok = True
        for name, passed, detail in checks:
            tag = "PASS" if passed else "FAIL"
            print(f"[{tag}] {name}: {detail}")
            ok = ok and passed
        return 0 if ok else 1

    try:
        config = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        artifacts = run_pipeline(config, stages=STAGE_COMMANDS[args.command])
    except PipelineStageError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 1
    print(f"artifacts written under {artifacts.outdir}")
    for key, value in sorted(artifacts.manifest.get("artifacts", {}).items()):
        print(f"  {key}: {value}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
