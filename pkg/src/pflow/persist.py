"""Run artifacts: ``series.csv`` (one row per observed state) and ``summary.json``."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .diagnostics import SERIES_COLUMNS, MonitorReport

SERIES_HEADER = ",".join(SERIES_COLUMNS)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def series_csv_text(report: MonitorReport) -> str:
    """CSV text with the fixed header; floats use their shortest round-trip repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for row in report.rows():
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_series_csv(report: MonitorReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(series_csv_text(report))
    return path


def read_series_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if ",".join(header) != SERIES_HEADER:
        raise ValueError(f"unexpected series header {header}")
    cols = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: cols[:, k] for k, name in enumerate(header)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_summary(summary: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=False) + "\n")
    return path


def write_final_state(u: np.ndarray, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, u)
    return path
