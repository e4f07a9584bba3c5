"""Per-replication diagnostics and their CSV / JSON persistence."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

CSV_COLUMNS = ("experiment", "n", "p", "replication", "metric", "value", "flag")
SCHEMA_VERSION = 1


@dataclass
class DiagnosticsRecord:
    """Metrics of one ``(n, replication)`` cell.

    A metric whose value is ``None`` must carry a flag (e.g. ``degenerate``);
    non-finite values are not allowed.
    """

    experiment: str
    n: int
    p: int
    replication: int
    metrics: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def set(self, name: str, value: Optional[float], flag: str = "") -> None:
        if value is not None:
            value = float(value)
            if not math.isfinite(value):
                value, flag = None, flag or "nonfinite"
        if value is None and not flag:
            raise ValueError(f"metric {name} has no value and no flag")
        self.metrics[name] = value
        if flag:
            self.flags[name] = flag

    def value(self, name: str) -> Optional[float]:
        return self.metrics.get(name)


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.17g}"


def emit_csv(records: Iterable[DiagnosticsRecord], path) -> None:
    """One row per metric, numbers at 17 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for rec in records:
                for name, value in rec.metrics.items():
                    w.writerow((rec.experiment, rec.n, rec.p, rec.replication, name, _fmt(value),
                                rec.flags.get(name, "")))
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc.strerror}") from exc


def read_csv(path) -> list:
    """Inverse of :func:`emit_csv`."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise OSError(f"cannot read records from {path}: {exc.strerror}") from exc
    records: dict = {}
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            exp, n, p, r, metric, value, flag = row
            key = (exp, int(n), int(r))
            rec = records.get(key)
            if rec is None:
                rec = records[key] = DiagnosticsRecord(exp, int(n), int(p), int(r))
            rec.metrics[metric] = float(value) if value != "" else None
            if flag:
                rec.flags[metric] = flag
    return list(records.values())


def emit_json(report: dict, path) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc
