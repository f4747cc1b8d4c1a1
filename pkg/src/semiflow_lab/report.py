"""Run reports: deterministic JSON and CSV emission."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .records import CheckRecord, IdentityReport

REPORT_SCHEMA = "semiflow-lab/run-report"
REPORT_VERSION = 1


def fmt(x) -> str:
    """CSV number format: 17 significant digits."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalar
        return _clean(obj.item())
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def check_entry(name: str, passed: bool, residual=None, tolerance=None, inputs=None, detail: str = "") -> dict:
    return {"name": name, "pass": bool(passed), "residual": residual, "tolerance": tolerance,
            "inputs": dict(inputs or {}), "detail": detail}


def from_record(prefix: str, rec: CheckRecord | IdentityReport) -> dict:
    if isinstance(rec, IdentityReport):
        return check_entry(f"{prefix}{rec.identity}", rec.passed, rec.residual, rec.tolerance,
                           {**rec.parameters, "scale": rec.scale})
    return check_entry(f"{prefix}{rec.name}", rec.passed, rec.residual, rec.tolerance, rec.inputs, rec.detail)


@dataclass
class RunReport:
    command: str
    scenario: dict
    checks: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_dict(self) -> dict[str, Any]:
        """Byte-stable content; timings are kept out and written separately."""
        return _clean({
            "schema": REPORT_SCHEMA,
            "schema_version": REPORT_VERSION,
            "command": self.command,
            "scenario": self.scenario,
            "checks": self.checks,
            "constants": self.constants,
            "artifacts": sorted(self.artifacts),
            "pass": self.passed,
        })

    def merge(self, other: "RunReport") -> None:
        self.checks.extend(other.checks)
        self.constants.update(other.constants)
        self.artifacts.extend(other.artifacts)
        self.timings.update(other.timings)


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: Path, obj) -> Path:
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def write_csv(path: Path, header: Iterable[str], rows: Iterable[Iterable]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def emit_report(report: RunReport, out_dir: str | Path, format: str = "json") -> list[Path]:
    """Write ``report.json`` (and ``timings.json``), or a CSV bundle of the checks."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if format == "json":
        paths = [write_json(out / "report.json", report.to_dict())]
        if report.timings:
            paths.append(write_json(out / "timings.json", report.timings))
        return paths
    if format == "csv-bundle":
        rows = [(c["name"], c["residual"], c["tolerance"], c["pass"]) for c in report.checks]
        path = out / "checks.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "residual", "tolerance", "pass"])
            for name, res, tol, ok in rows:
                w.writerow([name, "" if res is None else fmt(res), "" if tol is None else fmt(tol),
                            "true" if ok else "false"])
        return [path]
    raise ValueError(f"unknown report format {format!r}")
