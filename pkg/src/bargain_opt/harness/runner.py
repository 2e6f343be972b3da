"""Experiment orchestration: problem x aggregator x transform x initialization."""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..aggregators import aggregate
from ..core import DomainError, NumericalError, as_point
from ..engine import BargainingGame, Trajectory
from ..pareto import StationarityCertificate, bundle_residuals, certificate_from_gradients, sample_front_2d
from ..problems import QUAD_DOMAIN, TOY_DOMAIN, quad_pair, toy_initializations, toy_losses
from .config import ConfigError, RunConfig, load_custom_problem
from .io import fmt, write_json, write_trajectory_csv

logger = logging.getLogger(__name__)

THREADS_ENV = "BARGAIN_OPT_THREADS"

QUAD_INITIALIZATIONS = ((0.5, 0.9), (-0.8, 0.5), (0.3, -0.7), (0.9, 0.1), (-0.5, -0.9))


class ExperimentError(RuntimeError):
    """Failure of one initialization; ``numeric`` separates math from I/O trouble."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"initialization {index}: {cause}")
        self.index = index
        self.cause = cause
        self.numeric = isinstance(cause, (NumericalError, DomainError, FloatingPointError))


@dataclass
class InitResult:
    index: int
    initial_point: np.ndarray
    final_point: np.ndarray
    final_values: np.ndarray
    certificate: StationarityCertificate
    iterations: int
    first_stationary_iter: int | None
    terminated_by: str
    wall_time: float
    trajectory: Trajectory = field(repr=False)

    def to_dict(self) -> dict:
        c = self.certificate
        return {
            "index": self.index,
            "initial_point": self.initial_point,
            "final_point": self.final_point,
            "final_values": self.final_values,
            "certificate": {"residual": c.residual, "beta": c.beta, "is_stationary": bool(c.is_stationary)},
            "iterations": self.iterations,
            "first_stationary_iter": self.first_stationary_iter,
            "terminated_by": self.terminated_by,
        }


@dataclass
class RunReport:
    runs: list
    n_objectives: int
    stationarity_tol: float
    config: dict = field(default_factory=dict)
    nominal_objectives: tuple | None = field(default=None, repr=False)

    @property
    def fraction_stationary(self) -> float:
        if not self.runs:
            return 0.0
        return sum(r.certificate.is_stationary for r in self.runs) / len(self.runs)

    @property
    def total_wall_time(self) -> float:
        return sum(r.wall_time for r in self.runs)

    def to_dict(self) -> dict:
        # wall times stay out so that identical configs give identical bytes
        return {
            "config": self.config,
            "n_objectives": self.n_objectives,
            "stationarity_tol": self.stationarity_tol,
            "fraction_stationary": self.fraction_stationary,
            "runs": [r.to_dict() for r in self.runs],
        }

    def summary_lines(self) -> list[str]:
        lines = []
        for r in self.runs:
            first = "-" if r.first_stationary_iter is None else str(r.first_stationary_iter)
            lines.append(
                f"init {r.index}: final=({', '.join(fmt(v) for v in r.final_point)}) "
                f"residual={fmt(r.certificate.residual)} stationary={r.certificate.is_stationary} "
                f"first_stationary_iter={first} iterations={r.iterations} time={r.wall_time:.2f}s"
            )
        n_ok = sum(r.certificate.is_stationary for r in self.runs)
        lines.append(f"stationary: {n_ok}/{len(self.runs)} (fraction {self.fraction_stationary:.3f})")
        return lines


def build_problem(cfg: RunConfig):
    """``(game, nominal_game, initializations, plot_domain)`` for a config."""
    if cfg.problem == "toy":
        nominal = BargainingGame(toy_losses(), dim=2)
        builtin = toy_initializations()
        domain = TOY_DOMAIN
    elif cfg.problem == "quad_pair":
        nominal = quad_pair()
        builtin = [as_point(p) for p in QUAD_INITIALIZATIONS]
        domain = QUAD_DOMAIN
    else:
        nominal = load_custom_problem(cfg.problem_path)
        builtin = None
        domain = None

    if isinstance(cfg.initializations, str):
        if builtin is None:
            raise ConfigError("custom problems need explicit initializations")
        inits = builtin
    else:
        inits = [as_point(p) for p in cfg.initializations]
    for p in inits:
        if p.size != nominal.dim:
            raise ConfigError(f"initialization {p} does not match problem dimension {nominal.dim}")

    game = nominal
    if cfg.transform is not None:
        task, t = cfg.transform
        if not 0 <= task < nominal.n_agents:
            raise ConfigError(f"transform.task = {task} but the problem has {nominal.n_agents} tasks")
        game = nominal.transformed({task: t})
    return game, nominal, inits, domain


def optimize(game: BargainingGame, x0, cfg: RunConfig) -> tuple[Trajectory, int | None]:
    """Outer loop ``x <- x + alpha_k * aggregate(grads(x))``.

    Without early stopping the residuals do not influence the iteration, so
    they are computed for the whole run at once afterwards.
    """
    x = np.array(x0, dtype=np.float64)
    objectives = game.objectives
    points, values_seen, bundles, residuals = [], [], [], []
    terminated_by = "max_iters"
    first = None
    for k in range(cfg.max_iters + 1):
        evals = [o.value_and_gradient(x) for o in objectives]
        values = [v for v, _ in evals]
        G = np.array([g for _, g in evals])
        if not (math.isfinite(float(G.sum()) + float(x.sum())) and all(map(math.isfinite, values))):
            # the sums can overflow on finite entries; only a real inf or nan is an error
            if not (np.isfinite(G).all() and np.isfinite(x).all() and all(map(math.isfinite, values))):
                raise NumericalError("non-finite state, loss or gradient", k)
        points.append(x)
        values_seen.append(values)
        bundles.append(G)
        if cfg.early_stop:
            cert = certificate_from_gradients(G, cfg.stationarity_tol)
            residuals.append(cert.residual)
            if cert.is_stationary:
                first = k
                terminated_by = "residual_below_tol"
                break
        if k == cfg.max_iters:
            break
        x = x + cfg.schedule(k + 1) * aggregate(cfg.aggregator, G)

    if not cfg.early_stop:
        residuals = bundle_residuals(bundles).tolist()
        hits = [k for k, r in enumerate(residuals) if r <= cfg.stationarity_tol]
        first = hits[0] if hits else None
    traj = Trajectory()
    for k, (p, v, r) in enumerate(zip(points, values_seen, residuals)):
        traj.append(k, p, v, r)
    traj.terminated_by = terminated_by
    return traj, first


def _run_one(index: int, game, x0, cfg: RunConfig) -> InitResult:
    t0 = time.perf_counter()
    try:
        with np.errstate(over="raise", invalid="raise"):
            traj, first = optimize(game, x0, cfg)
    except (NumericalError, DomainError, FloatingPointError, OverflowError) as e:
        raise ExperimentError(index, e if not isinstance(e, OverflowError) else NumericalError(str(e))) from e
    cert = certificate_from_gradients([o.gradient(traj.final_point) for o in game.objectives], cfg.stationarity_tol)
    return InitResult(
        index=index,
        initial_point=np.array(x0),
        final_point=traj.final_point,
        final_values=traj.values[-1],
        certificate=cert,
        iterations=traj.iters[-1],
        first_stationary_iter=first,
        terminated_by=traj.terminated_by,
        wall_time=time.perf_counter() - t0,
        trajectory=traj,
    )


def _thread_count(n_tasks: int) -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return max(1, n_tasks)
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    return max(1, min(n, n_tasks))


def config_summary(cfg: RunConfig) -> dict:
    a = cfg.aggregator
    out = {
        "problem": cfg.problem,
        "aggregator": a.kind,
        "schedule": {"kind": cfg.schedule.kind, "alpha": cfg.schedule.alpha, "c": cfg.schedule.c, "offset": cfg.schedule.offset},
        "max_iters": cfg.max_iters,
        "stationarity_tol": cfg.stationarity_tol,
        "early_stop": cfg.early_stop,
        "seed": cfg.seed,
    }
    if a.kind in ("dibs_single", "dibs_multi"):
        out["epsilon"] = a.epsilon
    if a.kind == "dibs_multi":
        out["inner_steps"] = a.inner_steps
    if a.kind == "pcgrad":
        out["aggregator_seed"] = a.seed
    if cfg.transform is not None:
        out["transform"] = {"task": cfg.transform[0], "kind": cfg.transform[1].describe()}
    return out


def run_experiment(cfg: RunConfig, write: bool = True) -> RunReport:
    """Run every initialization and (optionally) write CSV, JSON and SVG outputs.

    Files land in ``cfg.output_dir``: ``trajectory_<i>.csv`` per
    initialization, ``report.json``, and ``plot.svg`` for two-objective,
    two-dimensional problems.
    """
    game, nominal, inits, domain = build_problem(cfg)
    workers = _thread_count(len(inits))
    if workers == 1:
        runs = [_run_one(i, game, x0, cfg) for i, x0 in enumerate(inits)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, i, game, x0, cfg) for i, x0 in enumerate(inits)]
            runs = [f.result() for f in futures]

    report = RunReport(
        runs=runs,
        n_objectives=game.n_agents,
        stationarity_tol=cfg.stationarity_tol,
        config=config_summary(cfg),
        nominal_objectives=nominal.objectives,
    )
    if write:
        write_outputs(report, cfg, nominal, domain)
    return report


def write_outputs(report: RunReport, cfg: RunConfig, nominal: BargainingGame, domain) -> None:
    from .plotting import render_plot_svg

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r in report.runs:
        write_trajectory_csv(r.trajectory, out / f"trajectory_{r.index:02d}.csv")
    write_json(report.to_dict(), out / "report.json")
    if cfg.plot and nominal.n_agents == 2 and nominal.dim == 2 and domain is not None:
        front = sample_front_2d(nominal, domain[0], domain[1], cfg.front_steps)
        title = cfg.aggregator.kind
        if cfg.transform is not None:
            title += f", {cfg.transform[1].describe()} on task {cfg.transform[0]}"
        render_plot_svg(report, front, out / "plot.svg", objectives=nominal.objectives, title=title)
