"""CSV and JSON output with round-trip precision."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path

import numpy as np


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_profile_csv(path, theta, omega, omega_theta) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "omega", "omega_theta"])
        for row in zip(theta, omega, omega_theta):
            w.writerow([_fmt(x) for x in row])


def write_field_csv(path, r, theta, u) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "theta", "u"])
        for i, ri in enumerate(r):
            for j, tj in enumerate(theta):
                w.writerow([_fmt(ri), _fmt(tj), _fmt(u[i, j])])


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in row] for row in body]) if body else np.empty((0, len(header)))
    return {name: data[:, k] for k, name in enumerate(header)}


def to_jsonable(obj):
    """Convert dataclasses, numpy values and non-finite floats to JSON-safe objects."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj) -> str:
    # repr-based float output is the shortest string that round-trips
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")
