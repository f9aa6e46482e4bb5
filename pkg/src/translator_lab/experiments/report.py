"""Experiment reports and the log-log / log-linear fits they rely on."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import FitError


def _canonical(value):
    """JSON-ready copy with floats kept exact (repr round-trips in Python's json)."""
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return _canonical(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    return value


def dumps17(obj, indent=2, _level=0) -> str:
    """JSON text with sorted keys and every float written with 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps17(obj[k], indent, _level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(pad + dumps17(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return json.dumps(_canonical(obj))
        return format(obj, ".17g")
    return dumps17(_canonical(obj), indent, _level)


@dataclass
class ExperimentReport:
    """Named metrics and boolean verdicts of one experiment run.

    Every verdict should be backed by a tolerance stored in ``parameters``;
    ``tolerances`` maps verdict name to that parameter key.
    """

    name: str
    parameters: dict
    metrics: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    runtime_seconds: float = 0.0

    def verdict(self, name, value, tolerance_key):
        if tolerance_key not in self.parameters:
            raise KeyError(f"tolerance {tolerance_key!r} missing from parameters")
        self.verdicts[name] = bool(value)
        self.tolerances[name] = tolerance_key

    @property
    def passed(self):
        return all(self.verdicts.values())

    def to_dict(self, include_runtime=True):
        d = {
            "name": self.name,
            "params": _canonical(self.parameters),
            "metrics": _canonical(self.metrics),
            "verdicts": _canonical(self.verdicts),
            "tolerances": _canonical(self.tolerances),
            "passed": self.passed,
        }
        if include_runtime:
            d["runtime"] = self.runtime_seconds
        return d

    def to_json(self, include_runtime=True):
        return dumps17(self.to_dict(include_runtime))

    def samples_csv(self):
        """Per-metric sample dumps as ``{metric: csv_text}`` for plotting."""
        out = {}
        for key, rows in sorted(self.samples.items()):
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            cols = list(rows.keys())
            w.writerow(cols)
            for row in zip(*(rows[c] for c in cols)):
                w.writerow([f"{float(v):.17g}" for v in row])
            out[key] = buf.getvalue()
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(
            name=d["name"],
            parameters=d["params"],
            metrics=d.get("metrics", {}),
            verdicts=d.get("verdicts", {}),
            tolerances=d.get("tolerances", {}),
            runtime_seconds=d.get("runtime", 0.0),
        )


def fit_decay_exponent(samples) -> float:
    """Least-squares slope of log(magnitude) against log(distance)."""
    arr = np.asarray(samples, float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FitError("samples must be (distance, magnitude) pairs")
    d, m = arr[:, 0], arr[:, 1]
    if len(d) < 8:
        raise FitError(f"need at least 8 samples, got {len(d)}")
    if np.any(d <= 0) or np.any(m <= 0) or not np.all(np.isfinite(arr)):
        raise FitError("distances and magnitudes must be positive and finite")
    if d.max() / d.min() < 8:
        raise FitError(f"distance span {d.max() / d.min():.3g} is below 8")
    slope, _ = np.polyfit(np.log(d), np.log(m), 1)
    return float(slope)


def fit_log_linear(s, y):
    """Fit log y = log C - beta s; returns (beta, C, r_squared)."""
    s = np.asarray(s, float)
    ly = np.log(np.asarray(y, float))
    if len(s) < 3:
        raise FitError("need at least 3 points for a log-linear fit")
    A = np.vstack([s, np.ones_like(s)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(-coef[0]), float(math.exp(coef[1])), r2
