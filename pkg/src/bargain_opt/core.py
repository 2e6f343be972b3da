"""Numeric building blocks shared by the rest of the package.

Points are plain 1-D ``float64`` numpy arrays; :func:`as_point` is the single
gate that validates them. Objectives carry hand-written value and gradient
oracles, and monotone transforms propagate gradients through the chain rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

GRAD_FLOOR = 1e-12


class DomainError(ValueError):
    """A scalar fell outside the validity interval of a transform."""


class NumericalError(RuntimeError):
    """A non-finite value or a diverging iterate was produced."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message if iteration is None else f"{message} (iteration {iteration})")
        self.iteration = iteration


def as_point(coords, dim: int | None = None) -> np.ndarray:
    """Validate ``coords`` and return them as a fresh 1-D float64 array."""
    p = np.array(coords, dtype=np.float64).reshape(-1)
    if p.size < 1:
        raise ValueError("a point needs at least one coordinate")
    if dim is not None and p.size != dim:
        raise ValueError(f"expected a point of dimension {dim}, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p}")
    return p


@dataclass(frozen=True)
class Objective:
    """Scalar loss with analytic gradient.

    ``both`` optionally returns ``(value, gradient)`` in one pass for losses
    that share most of the work between the two.
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    label: str = "objective"
    both: Callable[[np.ndarray], tuple] | None = None

    def __call__(self, x) -> float:
        return self.value(x)

    def value_and_gradient(self, x) -> tuple[float, np.ndarray]:
        if self.both is not None:
            return self.both(x)
        return self.value(x), self.gradient(x)


# ---------------------------------------------------------------------------
# Monotone transforms


@dataclass(frozen=True)
class MonotoneTransform:
    """Strictly increasing scalar map applied to a loss value.

    ``kind`` is one of ``identity``, ``signed_power`` (``sign(s)*|s|**p``),
    ``shifted_power`` (``(shift + s)**p`` on ``s > -shift``) or ``exponential``.
    """

    kind: str = "identity"
    exponent: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in ("identity", "signed_power", "shifted_power", "exponential"):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind in ("signed_power", "shifted_power") and not self.exponent > 1:
            raise ValueError("power transforms need an exponent > 1")

    @classmethod
    def identity(cls) -> "MonotoneTransform":
        return cls("identity")

    @classmethod
    def signed_power(cls, exponent: float) -> "MonotoneTransform":
        return cls("signed_power", exponent=float(exponent))

    @classmethod
    def shifted_power(cls, shift: float, exponent: float) -> "MonotoneTransform":
        return cls("shifted_power", exponent=float(exponent), shift=float(shift))

    @classmethod
    def exponential(cls) -> "MonotoneTransform":
        return cls("exponential")

    @property
    def interval(self) -> tuple[float, float]:
        """Open validity interval ``(lo, hi)``."""
        if self.kind == "shifted_power":
            return (-self.shift, math.inf)
        return (-math.inf, math.inf)

    def _check(self, s: float) -> None:
        lo, hi = self.interval
        if not (lo < s < hi):
            raise DomainError(f"{self.kind} transform is undefined at {s!r}; valid on ({lo}, {hi})")

    def __call__(self, s: float) -> float:
        self._check(s)
        if self.kind == "identity":
            return s
        if self.kind == "signed_power":
            return math.copysign(abs(s) ** self.exponent, s)
        if self.kind == "shifted_power":
            return (self.shift + s) ** self.exponent
        return math.exp(s)

    def derivative(self, s: float) -> float:
        self._check(s)
        if self.kind == "identity":
            return 1.0
        if self.kind == "signed_power":
            return self.exponent * abs(s) ** (self.exponent - 1.0)
        if self.kind == "shifted_power":
            return self.exponent * (self.shift + s) ** (self.exponent - 1.0)
        return math.exp(s)

    def describe(self) -> str:
        if self.kind == "signed_power":
            return f"signed_power({self.exponent:g})"
        if self.kind == "shifted_power":
            return f"shifted_power({self.shift:g},{self.exponent:g})"
        return self.kind


def apply_transform(t: MonotoneTransform, s: float) -> float:
    return t(float(s))


def transform_objective(o: Objective, t: MonotoneTransform) -> Objective:
    """Compose ``t`` after ``o``; the gradient is ``t'(o(x)) * grad o(x)``."""
    if t.kind == "identity":
        return o

    def value(x):
        return t(o.value(x))

    def gradient(x):
        return t.derivative(o.value(x)) * o.gradient(x)

    def both(x):
        v, g = o.value_and_gradient(x)
        return t(v), t.derivative(v) * g

    return Objective(value, gradient, label=f"{t.describe()}[{o.label}]", both=both)


def fd_gradient(o: Objective, p, step: float = 1e-6) -> np.ndarray:
    """Central-difference estimate of ``grad o`` at ``p``."""
    if step <= 0:
        raise ValueError("finite-difference step must be positive")
    p = as_point(p)
    g = np.empty_like(p)
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = step
        g[i] = (o.value(p + e) - o.value(p - e)) / (2.0 * step)
    return g


# ---------------------------------------------------------------------------
# Step sizes


@dataclass(frozen=True)
class StepSchedule:
    """``constant`` yields ``alpha`` forever; ``robbins_monro`` yields ``c / (k + offset)``.

    Iterations are counted from ``k = 1``.
    """

    kind: str = "constant"
    alpha: float = 0.01
    c: float = 1.0
    offset: int = 0

    def __post_init__(self):
        if self.kind == "constant":
            if not self.alpha > 0:
                raise ValueError("constant step must be positive")
        elif self.kind == "robbins_monro":
            if not self.c > 0 or self.offset < 0:
                raise ValueError("robbins_monro needs c > 0 and offset >= 0")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def constant(cls, alpha: float) -> "StepSchedule":
        return cls("constant", alpha=float(alpha))

    @classmethod
    def robbins_monro(cls, c: float = 1.0, offset: int = 0) -> "StepSchedule":
        return cls("robbins_monro", c=float(c), offset=int(offset))

    def __call__(self, k: int) -> float:
        if k < 1:
            raise ValueError("schedule index starts at 1")
        if self.kind == "constant":
            return self.alpha
        return self.c / (k + self.offset)

    def steps(self, count: int) -> np.ndarray:
        """First ``count`` step sizes as an array."""
        if self.kind == "constant":
            return np.full(count, self.alpha)
        return self.c / (np.arange(1, count + 1, dtype=np.float64) + self.offset)


def norm(v: np.ndarray) -> float:
    """Euclidean norm of a 1-D array; cheaper than ``np.linalg.norm`` on tiny vectors."""
    return math.sqrt(float(v @ v))


def unit(v: np.ndarray, floor: float = GRAD_FLOOR) -> np.ndarray | None:
    """``v / ||v||`` or ``None`` when the norm is below ``floor``."""
    n = norm(v)
    if n < floor:
        return None
    return v / n


def quadratic(center: Sequence[float], label: str = "quadratic") -> Objective:
    """``||x - center||^2``; used all over the tests and the bundled problems."""
    c = as_point(center)

    def value(x):
        d = np.asarray(x, dtype=np.float64) - c
        return float(d @ d)

    def gradient(x):
        return 2.0 * (np.asarray(x, dtype=np.float64) - c)

    return Objective(value, gradient, label=label)


__all__ = [
    "GRAD_FLOOR",
    "DomainError",
    "NumericalError",
    "MonotoneTransform",
    "Objective",
    "StepSchedule",
    "apply_transform",
    "as_point",
    "norm",
    "fd_gradient",
    "quadratic",
    "transform_objective",
    "unit",
]
