"""``refprior <command> --config FILE [--seed N] [--out DIR]``

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from .experiments import RUNNERS, ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="refprior", description="Learn and evaluate reference-prior approximations.")
    p.add_argument("command", choices=sorted(RUNNERS))
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config's seed list)")
    p.add_argument("--out", default=".", help="output directory")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"refprior: cannot load config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = RUNNERS[args.command](config, seed=args.seed, out_dir=args.out)
    except ConfigError as exc:
        print(f"refprior: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, OverflowError) as exc:
        print(f"refprior: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
