"""Command-line front end: run experiments, render plot scripts, self-check."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import time

from . import harness

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE_RATE = 3


def _default_workers() -> int:
    raw = os.environ.get("SECRELAY_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="secrelay",
        description="Monte-Carlo secrecy-rate experiments for jamming-assisted relaying",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment sweep and append CSV rows")
    run_p.add_argument("--config", required=True, help="experiment config file")
    run_p.add_argument("--trials", type=int, default=None, help="override trial count")
    run_p.add_argument(
        "--workers",
        type=int,
        default=None,
        help="worker processes (default: $SECRELAY_WORKERS or 1)",
    )
    run_p.add_argument("--out", default="results.csv", help="output CSV path (appended)")

    plot_p = sub.add_parser("plot", help="write a gnuplot script for a finished CSV")
    plot_p.add_argument("--in", dest="csv", required=True, help="input CSV path")
    plot_p.add_argument("--figure", required=True, help="figure id (fig3 .. fig7)")
    plot_p.add_argument("--out", required=True, help="output plot-script path")

    sub.add_parser("verify", help="run the built-in oracle checks")
    return parser


def _cmd_run(args) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    try:
        config = harness.load_config(args.config)
        if args.trials is not None:
            if args.trials < 1:
                raise harness.ConfigError("--trials must be >= 1")
            config = dataclasses.replace(config, trials=args.trials).validate()
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    workers = args.workers if args.workers is not None else _default_workers()
    started = time.perf_counter()
    try:
        count = harness.write_rows(args.out, harness.run(config, workers=workers))
    except harness.FailureRateExceeded as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE_RATE
    elapsed = time.perf_counter() - started
    print(f"wrote {count} rows to {args.out} in {elapsed:.1f}s", file=sys.stderr)
    return EXIT_OK


def _cmd_plot(args) -> int:
    try:
        harness.emit_plot_script(args.csv, args.figure, args.out)
    except (harness.ConfigError, harness.SchemaError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_verify() -> int:
    results = harness.verify_suite()
    failed = 0
    for name, ok, detail in results:
        status = "ok  " if ok else "FAIL"
        failed += not ok
        print(f"{status} {name}: {detail}")
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "plot":
        return _cmd_plot(args)
    return _cmd_verify()


if __name__ == "__main__":
    sys.exit(main())
