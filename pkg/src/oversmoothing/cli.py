"""Command line entry point: ``oversmoothing {table,figure,rates,verify}``."""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import ConfigError, ExperimentConfig, load_config, run_figure, run_rates, run_table

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_CONFIG = 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oversmoothing", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("table", "discrepancy or a priori table, one CSV row per (delta, seed)"),
        ("figure", "minimisers along the figure alpha rungs"),
        ("rates", "log-log slope of the median error against delta"),
        ("verify", "run the numerical property suite"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="INI experiment file", required=name != "verify")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.add_argument("--seed-base", type=int, default=0, help="offset added to every seed")
        if name == "verify":
            p.add_argument("--full", action="store_true", help="include the table and figure experiments")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.jobs < 1 or args.seed_base < 0:
        print("error: --jobs must be >= 1 and --seed-base >= 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "verify":
        from .checks import run_checks

        results = run_checks(full=args.full, jobs=args.jobs, out_dir=args.out or "verify_out")
        for r in results:
            print(r.line())
        return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED

    out = args.out
    if args.command == "table":
        path, records = run_table(config, out, args.jobs, args.seed_base)
        print(f"wrote {path} ({len(records)} rows, {sum(r.failed for r in records)} failed)")
        return EXIT_CHECK_FAILED if any(r.failed for r in records) else EXIT_OK
    if args.command == "figure":
        results = run_figure(config, out, args.jobs, args.seed_base)
        for r in results:
            errs = " ".join(f"{e:.4f}" for e in r.errors)
            print(f"seed {r.seed}: errors {errs}; selected alpha {r.alpha_star:.4g} error {r.error_star:.4f}")
        return EXIT_OK
    try:
        report = run_rates(config, out, args.jobs, args.seed_base)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(report.text(), end="")
    return EXIT_CHECK_FAILED if report.failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
