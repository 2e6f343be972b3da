"""Pareto-stationarity certificates and sampled two-objective fronts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_point, norm

FW_MAX_ITERS = 500
FW_TOL = 1e-9


@dataclass(frozen=True)
class StationarityCertificate:
    residual: float
    beta: np.ndarray
    is_stationary: bool


def _pair_weight(g1: np.ndarray, g2: np.ndarray) -> float:
    """Weight on ``g1`` minimising ``||w*g1 + (1-w)*g2||`` over ``[0, 1]``."""
    d = g1 - g2
    dd = float(d @ d)
    if dd == 0.0:
        return 0.5
    w = float((g2 - g1) @ g2) / dd
    return min(1.0, max(0.0, w))


def _affine_min(gram: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Minimiser of ``b' gram b`` over the affine hull of ``support`` (``sum b = 1``)."""
    k = support.size
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = gram[np.ix_(support, support)]
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    y = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
    return y / y.sum()


def _refine(gram: np.ndarray, beta: np.ndarray, max_cycles: int, tol: float) -> np.ndarray:
    """Active-set refinement of a feasible ``beta`` (Wolfe's minimum-norm-point cycles).

    Each major cycle solves the problem exactly on the current support; minor
    cycles walk back toward feasibility whenever that solution leaves the
    simplex, dropping the coordinate that hits zero. A vertex that still
    improves the objective is then added and the loop repeats.
    """
    n = beta.size
    support = np.flatnonzero(beta > 0)
    for _ in range(max_cycles):
        while True:
            y = _affine_min(gram, support)
            if not np.all(np.isfinite(y)):
                return beta
            if y.min() > 0:
                beta = np.zeros(n)
                beta[support] = y
                break
            # step from beta toward y until the first coordinate reaches zero
            b = beta[support]
            neg = y < b
            theta = float(np.min(b[neg] / (b[neg] - y[neg]))) if neg.any() else 1.0
            b = b + theta * (y - b)
            b[b < 1e-15] = 0.0
            beta = np.zeros(n)
            beta[support] = b
            beta /= beta.sum()
            support = np.flatnonzero(beta > 0)
        grad = gram @ beta
        j = int(np.argmin(grad))
        if float(grad @ beta - grad[j]) <= tol or j in support:
            return beta
        support = np.sort(np.append(support, j))
    return beta


def min_norm_weights(grads, max_iters: int = FW_MAX_ITERS, tol: float = FW_TOL) -> np.ndarray:
    """Simplex weights minimising ``||sum_i beta_i g_i||``.

    Two gradients use the closed form. Otherwise Frank-Wolfe with away steps
    runs on the Gram matrix, and its iterate seeds an exact active-set
    refinement.
    """
    G = np.atleast_2d(np.asarray(grads, dtype=np.float64))
    n = G.shape[0]
    if n == 1:
        return np.ones(1)
    if n == 2:
        w = _pair_weight(G[0], G[1])
        return np.array([w, 1.0 - w])

    gram = G @ G.T
    beta = np.full(n, 1.0 / n)
    for _ in range(max_iters):
        grad = gram @ beta
        fw = int(np.argmin(grad))
        active = np.flatnonzero(beta > 0)
        away = int(active[np.argmax(grad[active])])
        gap_fw = float(grad @ beta - grad[fw])
        gap_away = float(grad[away] - grad @ beta)
        if max(gap_fw, gap_away) <= tol:
            break
        if gap_fw >= gap_away:
            d = -beta.copy()
            d[fw] += 1.0
            step_max = 1.0
        else:
            d = beta.copy()
            d[away] -= 1.0
            step_max = beta[away] / (1.0 - beta[away]) if beta[away] < 1.0 else np.inf
        curv = float(d @ gram @ d)
        if curv <= 0.0:
            step = step_max
        else:
            step = min(step_max, -float(grad @ d) / curv)
        beta = beta + step * d
        beta[beta < 1e-15] = 0.0
        beta /= beta.sum()

    refined = _refine(gram, beta, 2 * n + 10, tol)
    if refined @ gram @ refined <= beta @ gram @ beta:
        beta = refined
    return beta


def pair_residuals(bundles: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form residuals and first-task weights for a stack of two-task bundles.

    ``bundles`` has shape ``(K, 2, dim)``. Used for single certificates too, so
    a residual recorded during a run and one recomputed later agree exactly.
    """
    g1, g2 = bundles[:, 0], bundles[:, 1]
    a = (g1 * g1).sum(axis=1)
    b = (g1 * g2).sum(axis=1)
    c = (g2 * g2).sum(axis=1)
    dd = a - 2.0 * b + c
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(dd > 0.0, np.clip((c - b) / np.where(dd > 0.0, dd, 1.0), 0.0, 1.0), 0.5)
    mix = w[:, None] * g1 + (1.0 - w)[:, None] * g2
    return np.sqrt((mix * mix).sum(axis=1)), w


def certificate_from_gradients(grads, tol: float = 1e-6, max_iters: int = FW_MAX_ITERS, fw_tol: float = FW_TOL):
    G = grads
    if not (isinstance(G, np.ndarray) and G.ndim == 2 and G.dtype == np.float64):
        G = np.atleast_2d(np.asarray(grads, dtype=np.float64))
    if G.shape[0] == 2:
        r, w = pair_residuals(G[None])
        residual, w = float(r[0]), float(w[0])
        return StationarityCertificate(residual, np.array([w, 1.0 - w]), residual <= tol)
    beta = min_norm_weights(G, max_iters, fw_tol)
    residual = norm(beta @ G)
    return StationarityCertificate(residual, beta, residual <= tol)


def bundle_residuals(bundles) -> np.ndarray:
    """Residuals for a sequence of same-shape bundles (``(K, N, dim)``)."""
    B = np.asarray(bundles, dtype=np.float64)
    if B.shape[1] == 2:
        return pair_residuals(B)[0]
    return np.array([certificate_from_gradients(G).residual for G in B])


def stationarity_residual(game, x, tol: float = 1e-6) -> StationarityCertificate:
    """Certificate for ``x``: distance from the origin to the hull of the gradients."""
    x = as_point(x, game.dim)
    return certificate_from_gradients([o.gradient(x) for o in game.objectives], tol)


# ---------------------------------------------------------------------------
# Fronts


@dataclass(frozen=True)
class FrontSample:
    points: np.ndarray  # (m, 2) pre-images
    values: np.ndarray  # (m, 2) objective values
    resolution: tuple[float, float]

    def __len__(self):
        return len(self.points)


def non_dominated(values: np.ndarray) -> np.ndarray:
    """Indices of the non-dominated rows of a 2-column array (minimisation).

    Exact duplicates are collapsed to their first occurrence.
    """
    v = np.asarray(values, dtype=np.float64)
    order = np.lexsort((v[:, 1], v[:, 0]))
    keep = []
    best = np.inf
    for idx in order:
        if v[idx, 1] < best:
            keep.append(idx)
            best = v[idx, 1]
    return np.array(sorted(keep, key=lambda i: (v[i, 0], v[i, 1])), dtype=int)


def sample_front_2d(game, lo, hi, steps_per_axis: int) -> FrontSample:
    """Grid the box ``[lo, hi]`` and keep the non-dominated objective vectors."""
    if len(game.objectives) != 2 or game.dim != 2:
        raise ValueError("front sampling needs two objectives over a 2-D domain")
    if steps_per_axis < 2:
        raise ValueError("steps_per_axis must be at least 2")
    lo = as_point(lo, 2)
    hi = as_point(hi, 2)
    xs = np.linspace(lo[0], hi[0], steps_per_axis)
    ys = np.linspace(lo[1], hi[1], steps_per_axis)
    grid = np.array([(x, y) for y in ys for x in xs])
    f1, f2 = game.objectives
    values = np.array([(f1.value(p), f2.value(p)) for p in grid])
    keep = non_dominated(values)
    res = ((hi[0] - lo[0]) / (steps_per_axis - 1), (hi[1] - lo[1]) / (steps_per_axis - 1))
    return FrontSample(grid[keep], values[keep], res)
