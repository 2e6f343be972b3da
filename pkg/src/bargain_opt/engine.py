"""Direction-based bargaining iterations on a general game.

A game holds one objective per agent and one preferred state (local minimiser)
per agent. Each iteration pulls the state along every agent's unit gradient,
weighted by the agent's distance to its preferred state. A radially bounded
variant switches to an attractive field far from the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import GRAD_FLOOR, MonotoneTransform, NumericalError, Objective, StepSchedule, as_point, transform_objective
from .pareto import stationarity_residual

DIVERGENCE_NORM = 1e12


class BargainingGame:
    """``N`` objectives sharing one state space, with their preferred states.

    ``preferred_states`` may be omitted for games that are only driven by
    gradient aggregators; :func:`dibs_direction` needs them.
    """

    def __init__(
        self,
        objectives: Sequence[Objective],
        preferred_states=None,
        feasible_radius: float | None = None,
        check_preferred: bool = True,
        dim: int | None = None,
    ):
        if len(objectives) < 1:
            raise ValueError("a game needs at least one objective")
        self.objectives = tuple(objectives)
        self.feasible_radius = feasible_radius
        if preferred_states is None:
            if dim is None:
                raise ValueError("dim is required when preferred states are not given")
            self.preferred_states = None
            self.dim = int(dim)
            return
        states = [as_point(p) for p in preferred_states]
        if len(states) != len(self.objectives):
            raise ValueError("need exactly one preferred state per objective")
        self.dim = states[0].size
        if any(s.size != self.dim for s in states):
            raise ValueError("preferred states disagree on dimension")
        if check_preferred:
            for o, s in zip(self.objectives, states):
                gn = float(np.linalg.norm(o.gradient(s)))
                if gn > 1e-6:
                    raise ValueError(f"preferred state of {o.label} is not stationary (|grad| = {gn:.3g})")
        self.preferred_states = tuple(states)

    @property
    def n_agents(self) -> int:
        return len(self.objectives)

    def values(self, x) -> np.ndarray:
        return np.array([o.value(x) for o in self.objectives])

    def gradients(self, x) -> np.ndarray:
        return np.array([o.gradient(x) for o in self.objectives])

    def transformed(self, transforms: dict[int, MonotoneTransform] | Sequence[MonotoneTransform]) -> "BargainingGame":
        """Same game with per-agent monotone transforms; preferred states are kept."""
        if not isinstance(transforms, dict):
            transforms = dict(enumerate(transforms))
        for i in transforms:
            if not 0 <= i < self.n_agents:
                raise ValueError(f"transform index {i} out of range for {self.n_agents} agents")
        objs = [transform_objective(o, transforms[i]) if i in transforms else o for i, o in enumerate(self.objectives)]
        game = BargainingGame.__new__(BargainingGame)
        game.objectives = tuple(objs)
        game.preferred_states = self.preferred_states
        game.feasible_radius = self.feasible_radius
        game.dim = self.dim
        return game


@dataclass(frozen=True)
class DibsConfig:
    schedule: StepSchedule = field(default_factory=lambda: StepSchedule.constant(0.01))
    max_iters: int = 100_000
    stationarity_tol: float = 1e-3
    grad_floor: float = GRAD_FLOOR

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not self.stationarity_tol > 0:
            raise ValueError("stationarity_tol must be positive")
        if not 0 < self.grad_floor <= 1e-8:
            raise ValueError("grad_floor must lie in (0, 1e-8]")


@dataclass(frozen=True)
class BoundedDynamicsConfig:
    """Inner radius ``R``, annulus width ``r``, radial step ``alpha``, perturbation ``a``.

    ``annulus_clock`` counts the iterates seen strictly inside the annulus.
    """

    R: float
    r: float
    alpha: float = 1.0
    a: np.ndarray | None = None
    annulus_clock: int = 0

    def __post_init__(self):
        if not (self.R > 0 and self.r > 0 and self.alpha > 0):
            raise ValueError("R, r and alpha must be positive")
        if self.annulus_clock < 0:
            raise ValueError("annulus_clock must be non-negative")

    @classmethod
    def for_game(cls, game: BargainingGame, R: float, r: float, alpha: float = 1.0, a=None) -> "BoundedDynamicsConfig":
        """Build a config after checking ``R`` clears every preferred state."""
        reach = max(float(np.linalg.norm(s)) for s in game.preferred_states)
        if not R > reach:
            raise ValueError(f"R = {R} must exceed the largest preferred-state norm {reach}")
        if a is None:
            a = np.ones(game.dim) / math.sqrt(game.dim)
        return cls(R, r, alpha, as_point(a, game.dim))

    def perturbation(self, dim: int) -> np.ndarray:
        if self.a is None:
            return np.ones(dim) / math.sqrt(dim)
        return self.a


@dataclass
class Trajectory:
    iters: list = field(default_factory=list)
    points: list = field(default_factory=list)
    values: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    terminated_by: str = "max_iters"

    def append(self, k: int, x, values, residual: float) -> None:
        if self.iters and k <= self.iters[-1]:
            raise ValueError("trajectory iterations must increase")
        self.iters.append(int(k))
        self.points.append(np.array(x, dtype=np.float64))
        self.values.append(np.array(values, dtype=np.float64))
        self.residuals.append(float(residual))

    def __len__(self):
        return len(self.iters)

    @property
    def final_point(self) -> np.ndarray:
        return self.points[-1]

    def as_arrays(self):
        return (
            np.array(self.iters, dtype=int),
            np.array(self.points),
            np.array(self.values),
            np.array(self.residuals),
        )


# ---------------------------------------------------------------------------
# Iteration


def dibs_direction(game: BargainingGame, x, grad_floor: float = GRAD_FLOOR) -> np.ndarray:
    """Distance-weighted sum of unit gradients; the step size is applied by the caller.

    Agents whose gradient norm is below ``grad_floor`` contribute nothing.
    """
    if game.preferred_states is None:
        raise ValueError("this game has no preferred states")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (game.dim,):
        raise ValueError(f"expected a point of dimension {game.dim}, got shape {x.shape}")
    h = np.zeros(game.dim)
    for o, star in zip(game.objectives, game.preferred_states):
        g = o.gradient(x)
        gn = float(np.linalg.norm(g))
        if gn < grad_floor:
            continue
        h += float(np.linalg.norm(x - star)) * (g / gn)
    return h


def _check_finite(x, values, k: int) -> None:
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(values))):
        raise NumericalError("non-finite state or loss value", k)


def dibs_run(game: BargainingGame, x0, cfg: DibsConfig = DibsConfig()) -> Trajectory:
    """Iterate ``x <- x - alpha_k * dibs_direction(x)`` and record every state.

    A run stops once the stationarity residual and the norm of the bargaining
    direction both drop to ``cfg.stationarity_tol``. The residual alone is not
    enough: every point on a segment between two opposed minimisers is Pareto
    stationary, but only the bargaining fixed point has a zero direction.
    """
    x = as_point(x0, game.dim)
    traj = Trajectory()
    for k in range(cfg.max_iters + 1):
        values = game.values(x)
        h = dibs_direction(game, x, cfg.grad_floor)
        _check_finite(h, values, k)
        cert = stationarity_residual(game, x, cfg.stationarity_tol)
        traj.append(k, x, values, cert.residual)
        if cert.is_stationary and float(np.linalg.norm(h)) <= cfg.stationarity_tol:
            traj.terminated_by = "residual_below_tol"
            break
        if k == cfg.max_iters:
            break
        x = x - cfg.schedule(k + 1) * h
    return traj


def find_preferred_state(o: Objective, x_start, lr: float, max_iters: int = 100_000, tol: float = 1e-8) -> np.ndarray:
    """Plain gradient descent from ``x_start`` until ``||grad|| <= tol``."""
    if not lr > 0:
        raise ValueError("lr must be positive")
    x = as_point(x_start)
    for k in range(max_iters):
        g = o.gradient(x)
        if float(np.linalg.norm(g)) <= tol:
            break
        x = x - lr * g
        if not np.all(np.isfinite(x)) or float(np.linalg.norm(x)) > DIVERGENCE_NORM:
            raise NumericalError(f"gradient descent on {o.label} diverged", k)
    return x


# ---------------------------------------------------------------------------
# Bounded variant


def annulus_blend(s: float) -> float:
    """Smooth switch ``g`` on the annulus, as a function of ``s = (||x|| - R) / r``.

    Equals 0 for ``s <= 0`` and 1 for ``s >= 1``.
    """
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    # e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)}) as a logistic in u, overflow-safe
    u = 1.0 / (1.0 - s) - 1.0 / s
    if u >= 0:
        return 1.0 / (1.0 + math.exp(-u))
    e = math.exp(u)
    return e / (1.0 + e)


def annulus_bump(s: float) -> float:
    """``s * (1 - s)`` inside the annulus, zero on and outside its boundary."""
    if s <= 0.0 or s >= 1.0:
        return 0.0
    return s * (1.0 - s)


def bounded_step(
    game: BargainingGame,
    x,
    cfg_d: DibsConfig,
    cfg_b: BoundedDynamicsConfig,
    k: int,
) -> tuple[np.ndarray, BoundedDynamicsConfig]:
    """One step of the switched dynamics; ``k`` is the 1-based step index.

    Inside ``||x|| <= R`` this is the plain bargaining step, beyond ``R + r``
    it moves ``alpha`` straight toward the origin, and in between it blends
    the two and adds a clock-driven perturbation along ``a``.
    """
    x = np.asarray(x, dtype=np.float64)
    norm = float(np.linalg.norm(x))
    R, r = cfg_b.R, cfg_b.r

    def inner():
        return x - cfg_d.schedule(k) * dibs_direction(game, x, cfg_d.grad_floor)

    def radial():
        if norm == 0.0:
            raise NumericalError("radial step is undefined at the origin", k)
        return x - cfg_b.alpha * x / norm

    if norm <= R:
        return inner(), cfg_b
    if norm >= R + r:
        return radial(), cfg_b
    clock = cfg_b.annulus_clock + 1
    s = (norm - R) / r
    g = annulus_blend(s)
    z = annulus_bump(s) * math.sin(clock) * cfg_b.perturbation(game.dim)
    nxt = (1.0 - g) * inner() + g * radial() + z
    return nxt, replace(cfg_b, annulus_clock=clock)


def bounded_run(game: BargainingGame, x0, cfg_d: DibsConfig, cfg_b: BoundedDynamicsConfig) -> Trajectory:
    """:func:`dibs_run` with :func:`bounded_step` as the update."""
    x = as_point(x0, game.dim)
    traj = Trajectory()
    for k in range(cfg_d.max_iters + 1):
        values = game.values(x)
        _check_finite(x, values, k)
        cert = stationarity_residual(game, x, cfg_d.stationarity_tol)
        traj.append(k, x, values, cert.residual)
        if cert.is_stationary and float(np.linalg.norm(x)) <= cfg_b.R:
            h = dibs_direction(game, x, cfg_d.grad_floor)
            if float(np.linalg.norm(h)) <= cfg_d.stationarity_tol:
                traj.terminated_by = "residual_below_tol"
                break
        if k == cfg_d.max_iters:
            break
        x, cfg_b = bounded_step(game, x, cfg_d, cfg_b, k + 1)
    return traj
