"""Command-line entry point.

    quasilab <experiment> [--config PATH] [--out DIR] [--workers N]
                          [--seed U64] [--format csv|json|both]

Experiments: weakstar, sphere-instability, revolution, flat-smallp,
pinfty, all.  Exit code 0 if every verdict is PASS, 1 on any FAIL or
NO-DATA, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, QuasilabError
from .experiments import EXPERIMENTS, emit_report, emit_summary, load_config, run_all

_COMMANDS = ("weakstar", "sphere-instability", "revolution", "flat-smallp", "pinfty", "all")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quasilab",
        description="Propagator perturbation experiments on the sphere, the "
        "periodic box, and surfaces of revolution.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment(s)")
        p.add_argument("--config", default=None, help="INI-style config file")
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--workers", type=int, default=None, help="parallel worker count")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized probes")
        p.add_argument(
            "--format", default=None, choices=("csv", "json", "both"),
            help="output format (default both)",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.config, seed=args.seed, workers=args.workers, out_format=args.format
        )
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.experiment == "all":
            reports = run_all(cfg)
        else:
            reports = [EXPERIMENTS[args.experiment](cfg)]
        fmt = cfg.run.out_format
        for report in reports:
            emit_report(report, args.out, fmt)
        emit_summary(reports, args.out, fmt)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except QuasilabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    ok = True
    for report in reports:
        for check in report.checks:
            status = "PASS" if check.passed else "FAIL"
            print(
                f"[{report.experiment}] {status} {check.name}: "
                f"measured={check.measured:.6g} bound={check.bound:.6g} "
                f"slack={check.slack:.3g}"
                + (f" ({check.detail})" if check.detail else "")
            )
        print(f"[{report.experiment}] verdict: {report.verdict} "
              f"({len(report.rows)} rows, {report.elapsed:.2f}s)")
        ok = ok and report.verdict == "PASS"
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
