"""
Text formats: JSONL traces, JSON documents and CSV tables.

Floats are written with 17 significant digits, so every double survives a
write/read cycle bit for bit.  Non-finite floats are written as the JSON
extensions ``Infinity``, ``-Infinity`` and ``NaN``, which the standard
library parser accepts.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Iterable, Optional

import numpy as np

from .core import Certificate, QueryRecord

__all__ = [
    "fmt", "dumps", "loads", "trace_lines", "write_trace", "parse_trace",
    "certificate_to_doc", "certificate_from_doc", "report_to_doc", "report_from_doc",
    "ExperimentConfig", "ScalingRow", "CSV_COLUMNS", "rows_to_csv", "rows_from_csv",
]


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    # keep float syntax so JSON readers do not turn -0.0 into the integer 0
    return s if any(c in s for c in ".en") else s + ".0"


def _encode(obj: Any, out: list):
    if obj is None or isinstance(obj, bool):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), out)
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)) + ": ")
            _encode(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _encode(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """JSON text with 17-significant-digit floats."""
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)


def loads(text: str) -> Any:
    return json.loads(text)


# traces ---------------------------------------------------------------------


def trace_lines(records: Iterable[QueryRecord]) -> str:
    return "".join(dumps({"t": r.t, "x": r.x, "f": r.value, "g": r.subgrad, "event": r.event}) + "\n"
                   for r in records)


def write_trace(path: str, records: Iterable[QueryRecord]):
    with open(path, "w") as fh:
        fh.write(trace_lines(records))


def parse_trace(text: str) -> list[QueryRecord]:
    out = []
    for line in text.splitlines():
        if line.strip():
            d = json.loads(line)
            out.append(QueryRecord(d["t"], np.array(d["x"], dtype=float), float(d["f"]),
                                   np.array(d["g"], dtype=float), d["event"]))
    return out


# certificates ---------------------------------------------------------------


def certificate_to_doc(cert: Certificate, **extra) -> dict:
    doc = {"type": "certificate", "center": cert.center, "delta": cert.delta,
           "probes": [{"point": p, "weight": w, "subgrad": s}
                      for p, w, s in zip(cert.points, cert.weights, cert.subgrads)],
           "g": cert.g, "norm": cert.norm}
    doc.update(extra)
    return doc


def certificate_from_doc(doc: dict) -> Certificate:
    probes = doc["probes"]
    dim = len(doc["center"])
    return Certificate(np.array(doc["center"], dtype=float), float(doc["delta"]),
                       np.array([p["point"] for p in probes], dtype=float).reshape(-1, dim),
                       np.array([p["weight"] for p in probes], dtype=float),
                       np.array([p["subgrad"] for p in probes], dtype=float).reshape(-1, dim),
                       np.array(doc["g"], dtype=float), float(doc["norm"]))


# arena reports --------------------------------------------------------------


def report_to_doc(report) -> dict:
    return {"type": "arena-report", "algorithm": report.algorithm, "T": report.T, "d": report.d,
            "r": report.r, "v": report.v, "queries": report.queries,
            "consistency": [list(c) for c in report.consistency],
            "nonstationarity": report.nonstationarity, "combination_min": report.combination_min,
            "separation": report.separation, "verdict": report.verdict}


def report_from_doc(doc: dict):
    from .arena import ArenaReport
    return ArenaReport(doc["queries"], doc["d"], doc["r"], np.array(doc["v"], dtype=float),
                       [tuple(c) for c in doc["consistency"]], doc["nonstationarity"],
                       doc["combination_min"], doc["separation"], doc["algorithm"], doc["T"])


# configs and scaling tables -------------------------------------------------


@dataclass
class ExperimentConfig:
    instance: str = "quadratic"
    algo: str = "ingd-det"
    delta: float = 0.1
    eps: float = 0.1
    seed: int = 0
    budget: int = 10000
    repetitions: int = 1
    H: Optional[float] = None
    R: Optional[float] = None
    x0: Optional[list] = None
    trace: Optional[str] = None
    cert: Optional[str] = None

    def __post_init__(self):
        if not (self.delta >= 0 and self.eps > 0):
            raise ValueError("need delta >= 0 and eps > 0")
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")

    def to_doc(self) -> dict:
        return asdict(self)

    @classmethod
    def from_doc(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


CSV_COLUMNS = ("instance", "algo", "delta", "eps", "seed", "oracle_calls", "success",
               "final_norm", "wall_time_ms")


@dataclass
class ScalingRow:
    instance: str
    algo: str
    delta: float
    eps: float
    seed: int
    oracle_calls: int
    success: bool
    final_norm: float
    wall_time_ms: float

    def __post_init__(self):
        if self.success and not self.final_norm <= self.eps:
            raise ValueError("a successful row must have final_norm <= eps")

    def cells(self) -> list[str]:
        return [self.instance, self.algo, fmt(self.delta), fmt(self.eps), str(self.seed),
                str(self.oracle_calls), "true" if self.success else "false", fmt(self.final_norm),
                fmt(self.wall_time_ms)]


def rows_to_csv(rows: Iterable[ScalingRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ScalingRow]:
    rd = csv.DictReader(io.StringIO(text))
    if tuple(rd.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {rd.fieldnames}")
    return [ScalingRow(r["instance"], r["algo"], float(r["delta"]), float(r["eps"]), int(r["seed"]),
                       int(r["oracle_calls"]), r["success"] == "true", float(r["final_norm"]),
                       float(r["wall_time_ms"])) for r in rd]
