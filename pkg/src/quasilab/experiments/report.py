"""Structured experiment reports: CSV tables and a JSON summary.

Every check stores the measured quantity, the bound it was compared
against, and the signed slack (positive = holds with room).  CSV rows hold
only reproducible numeric/text columns; wall-clock timings go to the JSON
summary, so repeated runs with the same config and seed are byte-identical
on the CSV side.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .. import __version__
from ..errors import QuasilabError

SCHEMA_VERSION = 1


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    bound: float
    slack: float
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        self.measured = float(self.measured)
        self.bound = float(self.bound)
        self.slack = float(self.slack)


@dataclass
class ExperimentReport:
    experiment: str
    columns: list[str]
    rows: list[tuple]
    checks: list[Check]
    config_echo: dict
    elapsed: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if not self.rows:
            return "NO-DATA"
        return "PASS" if all(c.passed for c in self.checks) else "FAIL"

    @property
    def worst_slack(self) -> float | None:
        if not self.checks:
            return None
        return min(c.slack for c in self.checks)


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_report(report: ExperimentReport, out_dir: str, fmt: str = "both") -> list[str]:
    """Write <experiment>.csv under out_dir; returns the paths written."""
    if fmt not in ("csv", "json", "both"):
        raise QuasilabError(f"unknown output format {fmt!r}")
    written: list[str] = []
    if fmt in ("csv", "both"):
        path = os.path.join(out_dir, f"{report.experiment}.csv")
        try:
            os.makedirs(out_dir, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(",".join(report.columns) + "\n")
                for row in report.rows:
                    fh.write(",".join(format_cell(v) for v in row) + "\n")
        except OSError as exc:
            raise QuasilabError(f"cannot write report to {path}: {exc}") from exc
        written.append(path)
    return written


def summary_payload(reports: list[ExperimentReport]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "experiments": {
            r.experiment: {
                "verdict": r.verdict,
                "rows": len(r.rows),
                "worst_slack": r.worst_slack,
                "elapsed_seconds": r.elapsed,
                "checks": [
                    {
                        "name": c.name,
                        "passed": c.passed,
                        "measured": c.measured,
                        "bound": c.bound,
                        "slack": c.slack,
                        "detail": c.detail,
                    }
                    for c in r.checks
                ],
                "extras": r.extras,
                "config": r.config_echo,
            }
            for r in reports
        },
    }


def emit_summary(reports: list[ExperimentReport], out_dir: str, fmt: str = "both") -> str | None:
    if fmt not in ("json", "both"):
        return None
    path = os.path.join(out_dir, "summary.json")
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(summary_payload(reports), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise QuasilabError(f"cannot write summary to {path}: {exc}") from exc
    return path
