"""Command line entry point: ``logtransport <command> --config PATH``."""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments
from .experiments import COMMANDS, ConfigError, NumericPolicyError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="logtransport",
                                 description="Transport experiments for quasi-periodic Schrodinger operators.")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="check a config file without running numerics")
    v.add_argument("--config", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    try:
        if args.command == "validate":
            print(experiments.validate(args.config))
            print("ok")
            return EXIT_OK
        # flag, then environment, then the file
        threads = args.threads if args.threads is not None else experiments.env_threads()
        cfg = experiments.load(args.config, args.seed, threads, args.out)
        summary = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericPolicyError as exc:
        print(f"numeric policy: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    failed = [c["name"] for c in summary.get("checks", []) if not c.get("passed", True)]
    print(json.dumps({"output_dir": cfg.output_dir, "checks_failed": failed}))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
