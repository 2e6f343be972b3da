"""Objective-space figures written as SVG through matplotlib.

Figures are built on a bare :class:`~matplotlib.figure.Figure` (no pyplot
state), with a fixed SVG hash salt and no date metadata so that identical
inputs give identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

MAX_PLOT_POINTS = 2000
MARGIN = 0.05

RC = {
    "svg.hashsalt": "bargain-opt",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

FRONT_COLOR = "#7f7f7f"
TRAJ_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def thin(n: int, limit: int = MAX_PLOT_POINTS) -> np.ndarray:
    """Evenly spaced indices into ``range(n)`` that always include the last one."""
    if n <= limit:
        return np.arange(n)
    idx = np.unique(np.linspace(0, n - 1, limit).round().astype(int))
    return idx


def axis_limits(values, margin: float = MARGIN) -> tuple[float, float]:
    """``(lo, hi)`` covering ``values`` with ``margin`` of the span on both sides."""
    v = np.asarray(values, dtype=np.float64).ravel()
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo
    if span == 0.0:
        span = max(abs(lo), 1.0)
    return lo - margin * span, hi + margin * span


def _objective_paths(report, objectives):
    """Thinned objective-space polylines, one per initialization."""
    paths = []
    for run in report.runs:
        traj = run.trajectory
        idx = thin(len(traj))
        if objectives is None:
            vals = np.array([traj.values[i][:2] for i in idx])
        else:
            vals = np.array([[o.value(traj.points[i]) for o in objectives] for i in idx])
        paths.append(vals)
    return paths


def render_plot_svg(report, front, path, objectives=None, labels=None, title: str | None = None) -> dict:
    """Draw the sampled front, trajectories, starts and end points in objective space.

    ``objectives`` re-evaluates trajectory points (e.g. to keep the untransformed
    axis for a transformed run). Returns the axis limits used.
    """
    n_obj = len(objectives) if objectives is not None else report.n_objectives
    if n_obj != 2:
        raise ValueError("objective-space plots need exactly two objectives")
    if labels is None:
        labels = [o.label for o in objectives] if objectives is not None else ["loss_0", "loss_1"]

    paths = _objective_paths(report, objectives)
    front_vals = np.asarray(front.values) if front is not None and len(front) else np.empty((0, 2))
    everything = np.vstack([front_vals, *paths]) if paths else front_vals
    xlim = axis_limits(everything[:, 0])
    ylim = axis_limits(everything[:, 1])

    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(5.0, 4.0))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot(1, 1, 1)
        if len(front_vals):
            order = np.argsort(front_vals[:, 0], kind="stable")
            ax.plot(front_vals[order, 0], front_vals[order, 1], color=FRONT_COLOR, lw=2.0, gid="front", zorder=1)
        for i, vals in enumerate(paths):
            color = TRAJ_COLORS[i % len(TRAJ_COLORS)]
            ax.plot(vals[:, 0], vals[:, 1], color=color, lw=1.0, gid=f"trajectory-{i}", zorder=2)
            ax.plot(vals[:1, 0], vals[:1, 1], "o", color="black", ms=5, gid=f"init-{i}", zorder=3)
            ax.plot(vals[-1:, 0], vals[-1:, 1], "*", color=color, mec="black", mew=0.5, ms=9, gid=f"final-{i}", zorder=4)
        ax.set_xlim(*xlim)
        ax.set_ylim(*ylim)
        ax.set_xlabel(labels[0])
        ax.set_ylabel(labels[1])
        if title:
            ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    return {"xlim": xlim, "ylim": ylim}
