"""Bundled benchmark problems.

* the two-objective nonconvex toy with gated log-valley and quadratic pieces,
* the symmetric quadratic pair used to show equal-projection bias.

The toy losses are evaluated with scalar ``math`` calls because the harness
spends most of its time in them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Objective, as_point, quadratic
from .engine import BargainingGame

LOG_CLAMP = 1e-6

TOY_DOMAIN = ((-10.0, -10.0), (10.0, 10.0))

# Starting points for the toy study; none sits on theta_2 = 0 where both losses
# vanish. Starts in the upper-left quadrant slide down the L1 log valley onto
# that line, where transforms like sign(s)|s|^p have zero slope, so the builtin
# set stays clear of that funnel.
TOY_INITIALIZATIONS = (
    (0.0, 5.0),
    (9.0, 9.0),
    (-7.5, -0.5),
    (9.0, -1.0),
    (-3.0, -5.0),
    (-9.0, -3.0),
)


def _gates(t2: float):
    """Gate values and their theta_2 derivatives (tanh branch taken at ties)."""
    h = math.tanh(0.5 * t2)
    dh = 0.5 * (1.0 - h * h)
    if h >= 0.0:
        c1, dc1 = h, dh
    else:
        c1, dc1 = 0.0, 0.0
    if -h >= 0.0:
        c2, dc2 = -h, -dh
    else:
        c2, dc2 = 0.0, 0.0
    return c1, dc1, c2, dc2


def _log_valley(u: float, th2: float):
    """``log(max(|u|, clamp)) + 6`` with its gradient; ``u`` is affine in theta_1 and ``tanh(theta_2)``."""
    a = abs(u)
    if a < LOG_CLAMP:
        return math.log(LOG_CLAMP) + 6.0, 0.0, 0.0
    sech2 = 1.0 - th2 * th2
    return math.log(a) + 6.0, -0.5 / u, sech2 / u


def _toy_parts(theta, task: int):
    t1, t2 = float(theta[0]), float(theta[1])
    c1, dc1, c2, dc2 = _gates(t2)
    th2 = math.tanh(t2)
    if task == 0:
        # 0.5*(-t1 - 7) - tanh(-t2)
        u = -0.5 * t1 - 3.5 + th2
        q = 7.0 - t1
        dq = -0.2 * q
    else:
        # 0.5*(-t1 + 3) - tanh(-t2) + 2
        u = -0.5 * t1 + 3.5 + th2
        q = t1 + 7.0
        dq = 0.2 * q
    f, df1, df2 = _log_valley(u, th2)
    g = (q * q + 0.1 * (t2 + 8.0) ** 2) / 10.0 - 20.0
    dg2 = 0.02 * (t2 + 8.0)
    value = c1 * f + c2 * g
    grad = (c1 * df1 + c2 * dq, dc1 * f + c1 * df2 + dc2 * g + c2 * dg2)
    return value, grad


def _toy_objective(task: int) -> Objective:
    def value(theta):
        return _toy_parts(theta, task)[0]

    def gradient(theta):
        return np.array(_toy_parts(theta, task)[1])

    def both(theta):
        v, g = _toy_parts(theta, task)
        return v, np.array(g)

    return Objective(value, gradient, label=f"L{task + 1}", both=both)


def toy_losses() -> tuple[Objective, Objective]:
    """The nonconvex pair ``(L1, L2)`` on ``R^2``."""
    return _toy_objective(0), _toy_objective(1)


def toy_initializations() -> list[np.ndarray]:
    return [as_point(p) for p in TOY_INITIALIZATIONS]


def toy_kink_distance(theta) -> float:
    """Distance-like margin to the non-smooth sets of the toy losses.

    The losses are non-differentiable on ``theta_2 = 0`` (gates) and where the
    log argument hits the clamp; finite-difference checks skip points whose
    margin is small.
    """
    t1, t2 = float(theta[0]), float(theta[1])
    th2 = math.tanh(t2)
    u1 = abs(-0.5 * t1 - 3.5 + th2) - LOG_CLAMP
    u2 = abs(-0.5 * t1 + 3.5 + th2) - LOG_CLAMP
    return min(abs(t2), abs(u1), abs(u2))


@dataclass(frozen=True)
class ToyProblem:
    losses: tuple[Objective, Objective]
    domain_hint: tuple[tuple[float, float], tuple[float, float]] = TOY_DOMAIN


def toy_problem() -> ToyProblem:
    return ToyProblem(toy_losses())


def quad_pair() -> BargainingGame:
    """``x^2 + (y-1)^2`` and ``x^2 + (y+1)^2`` with their exact minimizers."""
    l1 = quadratic((0.0, 1.0), label="l1")
    l2 = quadratic((0.0, -1.0), label="l2")
    return BargainingGame([l1, l2], [as_point((0.0, 1.0)), as_point((0.0, -1.0))])


QUAD_DOMAIN = ((-1.0, -1.0), (1.0, 1.0))


# Descent for each loss starts in its own deep basin (lower half-plane).
TOY_PREFERRED_START = ((6.0, -7.0), (-6.0, -7.0))


def toy_game(transforms=None, starts=TOY_PREFERRED_START, lr: float = 1e-2, max_iters: int = 100_000) -> BargainingGame:
    """Toy losses as a bargaining game whose preferred states come from gradient descent.

    The states are computed on the untransformed losses and shared with the
    transformed game, since monotone maps leave minimisers where they are.
    """
    from .engine import find_preferred_state

    losses = toy_losses()
    states = [find_preferred_state(o, s, lr, max_iters, 1e-4) for o, s in zip(losses, starts)]
    game = BargainingGame(list(losses), states, check_preferred=False)
    if transforms:
        game = game.transformed(transforms)
    return game
