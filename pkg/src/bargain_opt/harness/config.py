"""Flat ``dotted.key = value`` run configuration files.

Example::

    problem = toy
    aggregator.kind = dibs_single
    aggregator.epsilon = 1
    transform.task = 0
    transform.kind = signed_power
    transform.exponent = 4
    schedule.kind = constant
    schedule.alpha = 5e-3
    max_iters = 40000
    initializations = builtin

Blank lines and ``#`` comments are ignored. Unknown keys are errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..aggregators import AggregatorSpec
from ..core import MonotoneTransform, StepSchedule, as_point


class ConfigError(ValueError):
    pass


KNOWN_KEYS = {
    "problem",
    "problem.path",
    "aggregator.kind",
    "aggregator.epsilon",
    "aggregator.inner_steps",
    "aggregator.inner_alpha",
    "aggregator.max_fw_iters",
    "aggregator.fw_tol",
    "aggregator.seed",
    "transform.task",
    "transform.kind",
    "transform.exponent",
    "transform.shift",
    "schedule.kind",
    "schedule.alpha",
    "schedule.c",
    "schedule.offset",
    "max_iters",
    "stationarity_tol",
    "early_stop",
    "initializations",
    "seed",
    "output_dir",
    "plot",
    "front.steps",
}


@dataclass(frozen=True)
class RunConfig:
    problem: str = "toy"
    problem_path: Path | None = None
    aggregator: AggregatorSpec = field(default_factory=AggregatorSpec)
    transform: tuple[int, MonotoneTransform] | None = None
    schedule: StepSchedule = field(default_factory=lambda: StepSchedule.constant(5e-3))
    max_iters: int = 40_000
    stationarity_tol: float = 1e-3
    early_stop: bool = False
    initializations: tuple | str = "builtin"
    seed: int = 0
    output_dir: Path = Path("out")
    plot: bool = True
    front_steps: int = 200

    def __post_init__(self):
        if self.problem not in ("toy", "quad_pair", "custom"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.problem == "custom" and self.problem_path is None:
            raise ConfigError("problem = custom needs problem.path")
        if self.max_iters < 0:
            raise ConfigError("max_iters must be non-negative")
        if not self.stationarity_tol > 0:
            raise ConfigError("stationarity_tol must be positive")
        if self.front_steps < 2:
            raise ConfigError("front.steps must be at least 2")


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _bool(s: str) -> bool:
    v = s.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def parse_points(s: str) -> tuple:
    """``"x0,y0; x1,y1"`` into a tuple of points."""
    pts = []
    for chunk in s.split(";"):
        chunk = chunk.strip()
        if chunk:
            pts.append(as_point([float(c) for c in chunk.split(",")]))
    if not pts:
        raise ConfigError("initializations is empty")
    if len({p.size for p in pts}) != 1:
        raise ConfigError("initializations disagree on dimension")
    return tuple(pts)


def config_from_mapping(kv: dict[str, str], base_dir: Path | None = None) -> RunConfig:
    unknown = sorted(set(kv) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    get = kv.get
    try:
        agg = AggregatorSpec(
            kind=get("aggregator.kind", "dibs_single"),
            epsilon=float(get("aggregator.epsilon", 1.0)),
            inner_steps=int(get("aggregator.inner_steps", 10)),
            inner_schedule=StepSchedule.constant(float(get("aggregator.inner_alpha", 0.1))),
            max_fw_iters=int(get("aggregator.max_fw_iters", 500)),
            fw_tol=float(get("aggregator.fw_tol", 1e-9)),
            seed=int(get("aggregator.seed", get("seed", 0))),
        )
        kind = get("schedule.kind", "constant")
        if kind == "constant":
            schedule = StepSchedule.constant(float(get("schedule.alpha", 5e-3)))
        elif kind == "robbins_monro":
            schedule = StepSchedule.robbins_monro(float(get("schedule.c", 1.0)), int(get("schedule.offset", 0)))
        else:
            raise ConfigError(f"unknown schedule.kind {kind!r}")

        transform = None
        if "transform.kind" in kv:
            t = MonotoneTransform(
                kv["transform.kind"],
                exponent=float(get("transform.exponent", 1.0)),
                shift=float(get("transform.shift", 0.0)),
            )
            transform = (int(get("transform.task", 0)), t)

        inits = get("initializations", "builtin")
        inits = "builtin" if inits == "builtin" else parse_points(inits)

        path = get("problem.path")
        if path is not None:
            path = Path(path)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path

        return RunConfig(
            problem=get("problem", "toy"),
            problem_path=path,
            aggregator=agg,
            transform=transform,
            schedule=schedule,
            max_iters=int(get("max_iters", 40_000)),
            stationarity_tol=float(get("stationarity_tol", 1e-3)),
            early_stop=_bool(get("early_stop", "false")),
            initializations=inits,
            seed=int(get("seed", 0)),
            output_dir=Path(get("output_dir", "out")),
            plot=_bool(get("plot", "true")),
            front_steps=int(get("front.steps", 200)),
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from e


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return config_from_mapping(parse_kv(text), base_dir=path.parent)


def load_custom_problem(path):
    """Weighted quadratics ``scale_i * ||x - center_i||^2`` from a key-value file.

    Keys are ``task.<i>.center = c0,c1,...`` and optional ``task.<i>.scale``.
    """
    from ..core import Objective
    from ..engine import BargainingGame

    try:
        kv = parse_kv(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read problem file {path}: {e}") from e
    centers: dict[int, np.ndarray] = {}
    scales: dict[int, float] = {}
    for key, value in kv.items():
        parts = key.split(".")
        if len(parts) != 3 or parts[0] != "task" or parts[2] not in ("center", "scale"):
            raise ConfigError(f"unknown problem key {key!r}")
        try:
            idx = int(parts[1])
            if parts[2] == "center":
                centers[idx] = as_point([float(c) for c in value.split(",")])
            else:
                scales[idx] = float(value)
        except ValueError as e:
            raise ConfigError(f"{key}: {e}") from e
    if not centers or sorted(centers) != list(range(len(centers))):
        raise ConfigError("problem file needs task.0.center, task.1.center, ... without gaps")
    if set(scales) - set(centers):
        raise ConfigError("scale given for a task without a center")

    objectives = []
    for i in range(len(centers)):
        c, s = centers[i], scales.get(i, 1.0)
        if not s > 0:
            raise ConfigError(f"task.{i}.scale must be positive")

        def value(x, c=c, s=s):
            d = np.asarray(x, dtype=np.float64) - c
            return s * float(d @ d)

        def gradient(x, c=c, s=s):
            return 2.0 * s * (np.asarray(x, dtype=np.float64) - c)

        objectives.append(Objective(value, gradient, label=f"task{i}"))
    try:
        return BargainingGame(objectives, [centers[i] for i in range(len(centers))])
    except ValueError as e:
        raise ConfigError(str(e)) from e
