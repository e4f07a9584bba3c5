"""Command line entry point: ``svspectra run|report|validate``."""
from __future__ import annotations

import argparse
import os
import sys

from .harness.config import ConfigError, load_config
from .harness.records import emit_csv, emit_json, read_csv
from .harness.report import convergence_report
from .harness.runner import run_experiment, with_seed

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not a 64-bit unsigned integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svspectra", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte Carlo sweep and write its records as CSV")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=_u64, help="override master_seed")
    run.add_argument("--out", help="output directory (default: the config's output_path as given)")
    run.add_argument("--threads", type=_positive, default=1)

    report = sub.add_parser("report", help="summarize a records CSV and check acceptance thresholds")
    report.add_argument("--records", required=True)
    report.add_argument("--out", required=True)

    validate = sub.add_parser("validate", help="check a config without running it")
    validate.add_argument("--config", required=True)
    return parser


def _warn(config) -> None:
    for msg in config.warnings():
        print(f"warning: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    config = with_seed(load_config(args.config), args.seed)
    _warn(config)
    path = config.output_path
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, os.path.basename(path))
    records = run_experiment(config, threads=args.threads)
    emit_csv(records, path)
    print(path)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = convergence_report(read_csv(args.records))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    emit_json(report, args.out)
    for check in report["checks"]:
        print(f"{'PASS' if check['passed'] else 'FAIL'}  {check['name']}")
    return EXIT_OK if report["passed"] else EXIT_FAILED


def cmd_validate(args) -> int:
    config = load_config(args.config)
    _warn(config)
    print(f"ok: {config.experiment}, n_grid={list(config.n_grid)}, replications={config.replications}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "report": cmd_report, "validate": cmd_validate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
