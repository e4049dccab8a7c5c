"""Deterministic JSON and CSV writers.

Floats are written with 17 significant digits so a value round-trips
exactly; dict insertion order is preserved, never sorted.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

__all__ = ["dumps", "write_json", "write_csv", "config_hash", "fmt_float"]


def fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = "%.17g" % x
    # keep floats recognisable as floats
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def write_csv(path, header, rows) -> Path:
    """Rows of numbers; floats use the same 17-digit format as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([
                "%.17g" % v if isinstance(v, (float, np.floating)) else v for v in row
            ])
    return path


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def write_eigen_table(sys, path) -> Path:
    cols = ("lam", "jzero", "Kn", "omega", "phi_at_1", "phi_at_0")
    rows = ([n, *(float(getattr(sys, c)[n]) for c in cols)] for n in range(sys.N + 1))
    return write_csv(path, ["n", "lambda", *cols[1:]], rows)


def write_matrix(M, path) -> Path:
    M = np.asarray(M, dtype=float)
    header = ["n"] + [str(j) for j in range(M.shape[1])]
    return write_csv(path, header, ([i, *map(float, row)] for i, row in enumerate(M)))


def write_trajectory(traj, path, stride: int = 1) -> Path:
    m = traj.a.shape[1]
    header = ["t"] + [f"a_{n}" for n in range(m)] + [f"v_{n}" for n in range(m)]
    idx = list(range(0, len(traj.times), max(1, int(stride))))
    if idx[-1] != len(traj.times) - 1:
        idx.append(len(traj.times) - 1)
    rows = ([float(traj.times[k]), *map(float, traj.a[k]), *map(float, traj.v[k])] for k in idx)
    return write_csv(path, header, rows)


def write_control(signal, path, n_samples: int) -> Path:
    t, v = signal.sample(n_samples)
    return write_csv(path, ["t", "p"], zip(map(float, t), map(float, v)))
