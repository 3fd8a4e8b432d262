"""Experiment reports and their JSON / CSV serialisation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SCHEMA", "ExperimentReport", "to_jsonable", "overall_verdict"]

SCHEMA = "qembed-report/1"


def to_jsonable(obj):
    """Convert numpy scalars/arrays and tuples into plain JSON types.

    Non-finite floats become ``None``; complex numbers become ``[re, im]``.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def overall_verdict(verdicts: dict) -> str:
    return "fail" if any(v == "fail" for v in verdicts.values()) else "pass"


@dataclass
class ExperimentReport:
    experiment_id: str
    params: dict
    seed: int
    bounds: dict = field(default_factory=dict)
    aggregates: dict = field(default_factory=dict)
    trials: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    runtime_seconds: float | None = None

    @property
    def passed(self) -> bool:
        return overall_verdict(self.verdicts) == "pass"

    def to_dict(self, full: bool = False) -> dict:
        out = {
            "schema": SCHEMA,
            "experiment_id": self.experiment_id,
            "params": self.params,
            "seed": self.seed,
            "bounds": self.bounds,
            "aggregates": self.aggregates,
        }
        if full:
            out["trials"] = self.trials
        out["verdicts"] = self.verdicts
        out["runtime_seconds"] = self.runtime_seconds
        return to_jsonable(out)

    def to_json(self, full: bool = False) -> str:
        return json.dumps(self.to_dict(full), indent=2, ensure_ascii=False, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        """One row per trial record, header first, RFC 4180 quoting."""
        rows = [to_jsonable(r) for r in self.trials]
        buf = io.StringIO()
        if not rows:
            return ""
        fieldnames = list(rows[0].keys())
        for r in rows[1:]:
            fieldnames += [k for k in r if k not in fieldnames]
        writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\r\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
        return buf.getvalue()
