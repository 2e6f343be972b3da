"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..core import DomainError, NumericalError, fd_gradient
from ..engine import BargainingGame
from ..pareto import sample_front_2d
from ..problems import QUAD_DOMAIN, TOY_DOMAIN, quad_pair, toy_kink_distance, toy_losses
from .config import ConfigError, load_config
from .io import fmt
from .runner import ExperimentError, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2

GRADIENT_RTOL = 1e-5
KINK_MARGIN = 1e-3


def _problem(name: str):
    if name == "toy":
        return BargainingGame(toy_losses(), dim=2), TOY_DOMAIN, toy_kink_distance
    if name == "quad_pair":
        return quad_pair(), QUAD_DOMAIN, None
    raise ConfigError(f"unknown problem {name!r}; expected toy or quad_pair")


def gradient_check(name: str, samples: int = 100, seed: int = 0, step: float = 1e-6) -> dict[str, float]:
    """Worst relative gap between analytic and central-difference gradients per objective."""
    game, (lo, hi), kink = _problem(name)
    rng = np.random.default_rng(seed)
    worst = {}
    for o in game.objectives:
        err, taken = 0.0, 0
        while taken < samples:
            p = rng.uniform(lo, hi)
            if kink is not None and kink(p) < KINK_MARGIN:
                continue
            a = o.gradient(p)
            err = max(err, float(np.linalg.norm(a - fd_gradient(o, p, step))) / max(1.0, float(np.linalg.norm(a))))
            taken += 1
        worst[o.label] = err
    return worst


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    changes = {}
    if args.out is not None:
        changes["output_dir"] = Path(args.out)
    if args.seed is not None:
        changes["seed"] = args.seed
        changes["aggregator"] = dataclasses.replace(cfg.aggregator, seed=args.seed)
    cfg = dataclasses.replace(cfg, **changes)
    report = run_experiment(cfg)
    for line in report.summary_lines():
        print(line)
    print(f"outputs written to {cfg.output_dir}")
    return EXIT_OK


def cmd_front(args) -> int:
    game, (lo, hi), _ = _problem(args.problem)
    if len(game.objectives) != 2:
        raise ConfigError("front sampling needs a two-objective problem")
    front = sample_front_2d(game, lo, hi, args.steps)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x0", "x1", "loss_0", "loss_1"])
        for p, v in zip(front.points, front.values):
            w.writerow([*map(fmt, p), *map(fmt, v)])
    _front_figure(front, game, out.with_suffix(".svg"))
    print(f"{len(front)} non-dominated samples written to {out}")
    return EXIT_OK


def _front_figure(front, game, path) -> None:
    import matplotlib

    from .plotting import RC, FRONT_COLOR, axis_limits
    from matplotlib.backends.backend_svg import FigureCanvasSVG
    from matplotlib.figure import Figure

    with matplotlib.rc_context(RC):
        fig = Figure(figsize=(4.0, 3.5))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot(1, 1, 1)
        v = front.values
        order = np.argsort(v[:, 0], kind="stable")
        ax.plot(v[order, 0], v[order, 1], ".", color=FRONT_COLOR, ms=2, gid="front")
        ax.set_xlim(*axis_limits(v[:, 0]))
        ax.set_ylim(*axis_limits(v[:, 1]))
        ax.set_xlabel(game.objectives[0].label)
        ax.set_ylabel(game.objectives[1].label)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})


def cmd_check_gradients(args) -> int:
    worst = gradient_check(args.problem, args.samples, args.seed)
    ok = True
    for label, err in worst.items():
        status = "ok" if err <= GRADIENT_RTOL else "FAIL"
        ok &= err <= GRADIENT_RTOL
        print(f"{label}: max relative error {err:.3e} [{status}]")
    return EXIT_OK if ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bargain-opt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("front", help="sample the Pareto front of a two-objective problem")
    p.add_argument("--problem", default="toy")
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--out", required=True, help="CSV path; an SVG is written next to it")
    p.set_defaults(func=cmd_front)

    p = sub.add_parser("check-gradients", help="compare analytic gradients with finite differences")
    p.add_argument("--problem", default="toy")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_gradients)

    p = sub.add_parser("version", help="print the package version")
    p.set_defaults(func=lambda args: print(__version__) or EXIT_OK)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC if e.numeric else EXIT_CONFIG
    except (NumericalError, DomainError) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
