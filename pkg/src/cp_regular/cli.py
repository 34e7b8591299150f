"""Command line interface: ``cp-regular run|validate <config>``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, load_config
from .tree import BudgetExceeded

EXIT_OK, EXIT_USAGE, EXIT_BUDGET = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cp-regular", description="Contact process experiments on random regular graphs")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the scenario described by a config file")
    run.add_argument("config")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--threads", type=int, help="worker processes for replicas")
    run.add_argument("--out", help="output directory")
    run.add_argument("-v", "--verbose", action="store_true")
    val = sub.add_parser("validate", help="check a config file without running it")
    val.add_argument("config")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"cp-regular: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "validate":
        print(json.dumps(cfg.echo(), indent=2))
        return EXIT_OK

    if args.seed is not None:
        if args.seed < 0:
            print("cp-regular: --seed must be non-negative", file=sys.stderr)
            return EXIT_USAGE
        cfg.seed = args.seed
    if args.threads is not None:
        if args.threads < 1:
            print("cp-regular: --threads must be positive", file=sys.stderr)
            return EXIT_USAGE
        cfg.threads = args.threads
    if args.out is not None:
        cfg.out = args.out
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")

    from .scenarios import run_scenario

    try:
        summary = run_scenario(cfg)
    except ConfigError as exc:
        print(f"cp-regular: invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"cp-regular: aborted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    passed = summary.get("passed")
    print(f"{cfg.scenario}: wrote {', '.join(summary['files'])} to {cfg.out}"
          + ("" if passed is None else f" (checks {'passed' if passed else 'FAILED'})"))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
