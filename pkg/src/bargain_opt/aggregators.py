"""Per-update gradient aggregation rules for multitask learning.

Every aggregator maps a bundle of task gradients (rows of a 2-D array) to an
update step ``delta_theta`` that the caller adds to the shared parameters.
Steps point downhill, so callers do ``theta + lr * aggregate(...)``.

Degenerate bundles are reported through the optional ``info`` dict, which
receives a ``"flag"`` entry when a fallback was taken.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import GRAD_FLOOR, StepSchedule, norm
from .pareto import FW_MAX_ITERS, FW_TOL, min_norm_weights

logger = logging.getLogger(__name__)

KINDS = ("dibs_single", "dibs_multi", "ls", "min_norm", "pcgrad", "imtl_g")


def as_bundle(grads) -> np.ndarray:
    G = grads if isinstance(grads, np.ndarray) and grads.dtype == np.float64 else np.asarray(grads, dtype=np.float64)
    if G.ndim == 1:
        G = G[None, :]
    if G.ndim != 2 or G.shape[0] < 1 or G.shape[1] < 1:
        raise ValueError(f"gradient bundle must be (N, dim), got shape {G.shape}")
    # a finite sum means every entry is finite; only check elementwise otherwise
    if not math.isfinite(float(G.sum())) and not np.isfinite(G).all():
        raise ValueError("gradient bundle has non-finite entries")
    return G


def _flag(info, flag: str) -> None:
    logger.debug("aggregator fallback: %s", flag)
    if info is not None:
        info["flag"] = flag


def _unit_rows(G: np.ndarray, grad_floor: float) -> np.ndarray:
    """Unit gradients of the tasks above the floor, in task order."""
    norms = np.sqrt(np.einsum("ij,ij->i", G, G))
    if min(norms.tolist()) < grad_floor:
        keep = norms >= grad_floor
        G, norms = G[keep], norms[keep]
    return G / norms[:, None]


def aggregate_dibs_single(grads, epsilon: float = 1.0, grad_floor: float = GRAD_FLOOR, info=None) -> np.ndarray:
    """``-epsilon * sum_i g_i / ||g_i||``; tasks below ``grad_floor`` are skipped."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    G = as_bundle(grads)
    U = _unit_rows(G, grad_floor)
    if U.shape[0] == 0:
        _flag(info, "all_below_floor")
        return np.zeros(G.shape[1])
    return -epsilon * U.sum(axis=0)


def aggregate_dibs_multi(
    grads,
    epsilon: float = 1.0,
    inner_steps: int = 10,
    schedule: StepSchedule | None = None,
    grad_floor: float = GRAD_FLOOR,
    info=None,
) -> np.ndarray:
    """Run the bargaining recursion on the linearised per-update game.

    Each task's preferred update is ``-epsilon * u_i`` (``u_i`` its unit
    gradient) and the recursion starts from zero. With more than one inner
    step the result is projected back onto the ``epsilon`` ball; a single
    step is returned as is, which reproduces :func:`aggregate_dibs_single`.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if inner_steps < 1:
        raise ValueError("inner_steps must be at least 1")
    schedule = schedule or StepSchedule.constant(0.1)
    G = as_bundle(grads)
    U = _unit_rows(G, grad_floor)
    delta = np.zeros(G.shape[1])
    if U.shape[0] == 0:
        _flag(info, "all_below_floor")
        return delta
    for k in range(1, inner_steps + 1):
        # ||delta + eps*u|| = eps * sqrt(|delta/eps|^2 + 2 (delta/eps).u + 1) since |u| = 1
        scaled = delta / epsilon
        dist = np.sqrt(np.maximum(float(scaled @ scaled) + 2.0 * (U @ scaled) + 1.0, 0.0))
        pull = (dist[:, None] * U).sum(axis=0)
        delta = delta - schedule(k) * (epsilon * pull)
    if inner_steps > 1:
        n = norm(delta)
        if n > epsilon:
            delta = delta * (epsilon / n)
    return delta


def aggregate_ls(grads) -> np.ndarray:
    return -as_bundle(grads).sum(axis=0)


def aggregate_min_norm(grads, max_fw_iters: int = FW_MAX_ITERS, fw_tol: float = FW_TOL) -> np.ndarray:
    """Negated minimum-norm point of the convex hull of the gradients."""
    G = as_bundle(grads)
    beta = min_norm_weights(G, max_fw_iters, fw_tol)
    return -(beta @ G)


def aggregate_pcgrad(grads, seed: int = 0) -> np.ndarray:
    """Project each gradient off the others it conflicts with, then average.

    The visiting order is a permutation drawn from ``seed``.
    """
    G = as_bundle(grads)
    n = G.shape[0]
    order = np.random.default_rng(seed).permutation(n)
    sq = np.einsum("ij,ij->i", G, G)
    out = np.zeros_like(G)
    for i in order:
        gi = G[i].copy()
        for j in order:
            if j == i or sq[j] == 0.0:
                continue
            dot = float(gi @ G[j])
            if dot < 0.0:
                gi -= (dot / sq[j]) * G[j]
        out[i] = gi
    return -out.sum(axis=0) / n


def aggregate_imtl_g(grads, grad_floor: float = GRAD_FLOOR, info=None) -> np.ndarray:
    """Combination of the gradients with equal projection on every unit gradient.

    Weights sum to one; the ``N - 1`` equal-projection constraints fix them.
    The combination is then oriented so that the shared projection is
    non-negative, which makes the returned step a descent step and keeps its
    direction independent of per-task gradient scales. A singular system falls
    back to :func:`aggregate_min_norm`.
    """
    G = as_bundle(grads)
    n = G.shape[0]
    if n < 2:
        raise ValueError("equal-projection aggregation needs at least two tasks")
    norms = np.linalg.norm(G, axis=1)
    if np.any(norms < grad_floor):
        _flag(info, "singular_fallback")
        return aggregate_min_norm(G)
    U = G / norms[:, None]
    D = G[0] - G[1:]
    Ud = U[0] - U[1:]
    A = Ud @ D.T
    b = Ud @ G[0]
    try:
        if np.linalg.cond(A) > 1e12:
            raise np.linalg.LinAlgError("ill-conditioned")
        tail = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        _flag(info, "singular_fallback")
        return aggregate_min_norm(G)
    alpha = np.concatenate(([1.0 - tail.sum()], tail))
    d = alpha @ G
    if float(d @ U[0]) < 0.0:
        d = -d
    return -d


@dataclass(frozen=True)
class AggregatorSpec:
    """Which aggregator to use and its parameters."""

    kind: str = "dibs_single"
    epsilon: float = 1.0
    inner_steps: int = 10
    inner_schedule: StepSchedule = field(default_factory=lambda: StepSchedule.constant(0.1))
    max_fw_iters: int = FW_MAX_ITERS
    fw_tol: float = FW_TOL
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown aggregator {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.inner_steps < 1 or self.max_fw_iters < 1 or not self.fw_tol > 0:
            raise ValueError("inner_steps, max_fw_iters and fw_tol must be positive")


def aggregate(spec: AggregatorSpec, grads, info=None) -> np.ndarray:
    if spec.kind == "dibs_single":
        return aggregate_dibs_single(grads, spec.epsilon, info=info)
    if spec.kind == "dibs_multi":
        return aggregate_dibs_multi(grads, spec.epsilon, spec.inner_steps, spec.inner_schedule, info=info)
    if spec.kind == "ls":
        return aggregate_ls(grads)
    if spec.kind == "min_norm":
        return aggregate_min_norm(grads, spec.max_fw_iters, spec.fw_tol)
    if spec.kind == "pcgrad":
        return aggregate_pcgrad(grads, spec.seed)
    return aggregate_imtl_g(grads, info=info)
