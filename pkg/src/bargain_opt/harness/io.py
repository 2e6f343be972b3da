"""Trajectory CSV and report JSON writers."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..engine import Trajectory


def fmt(v: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return f"{float(v):.17g}"


def trajectory_header(dim: int, n_losses: int) -> list[str]:
    return ["iter", *(f"x{i}" for i in range(dim)), *(f"loss_{i}" for i in range(n_losses)), "residual"]


def write_trajectory_csv(traj: Trajectory, path, dim: int | None = None, n_losses: int | None = None) -> None:
    """Write one row per record; an empty trajectory needs ``dim`` and ``n_losses`` for its header."""
    if len(traj):
        dim = traj.points[0].size
        n_losses = traj.values[0].size
    elif dim is None or n_losses is None:
        raise ValueError("empty trajectory: pass dim and n_losses for the header")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(dim, n_losses))
        for k, x, v, r in zip(traj.iters, traj.points, traj.values, traj.residuals):
            w.writerow([k, *map(fmt, x), *map(fmt, v), fmt(r)])


def read_trajectory_csv(path) -> Trajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    dim = sum(h.startswith("x") for h in header)
    n = sum(h.startswith("loss_") for h in header)
    traj = Trajectory()
    for row in rows[1:]:
        vals = [float(c) for c in row[1:]]
        traj.append(int(row[0]), np.array(vals[:dim]), np.array(vals[dim : dim + n]), vals[dim + n])
    return traj


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(data, path) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
