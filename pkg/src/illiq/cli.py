"""Command-line driver: ``illiq <command> --config FILE [--out DIR] [--seed N]``.

Commands
--------
solve        write the value surface (CSV) and a small summary (JSON)
region       write the no-trade region with threshold times (CSV)
simulate     Monte Carlo policy evaluation (JSON)
asymptotics  expansion coefficients and limiting benchmarks (JSON)
sweep        coupled cost/intensity sweep vs. predictions (CSV)
figures      CSV data behind the standard figures (fig1/fig2/fig3)

All outputs embed the fully resolved configuration (CSV as ``#`` header
lines, JSON as a ``config`` field) and a schema tag, and contain no
timestamps, so a rerun with the same config is byte-identical.  Exit code 1
signals invalid input, 2 a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .asymptotics import (
    a1,
    a2,
    coefficient_curve,
    continuous_benchmark,
    continuous_limit_coefficients,
    discrete_benchmark,
    discrete_limit_coefficient,
    predicted_value_decrease,
    predicted_width,
    sweep,
)
from .config import RunConfig, load_config, with_overrides
from .errors import NumericalError, ValidationError
from .hjb import make_grid, solve
from .model import merton_fraction, merton_value
from .no_trade import extract_region, threshold_times_integral, write_region_csv
from .policy import Policy, default_initial_fraction, simulate
from .rng import _check_seed  # seed validation shared with the generator

__all__ = ["main"]

log = logging.getLogger(__name__)


def _write_json(path: str, schema: str, cfg: RunConfig, payload: dict) -> None:
    doc = {"schema": schema, "config": cfg.resolved_lines()}
    doc.update(payload)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_csv(path: str, schema: str, cfg: RunConfig, columns, rows, extra=None) -> None:
    with open(path, "w") as f:
        f.write(f"# schema={schema}\n")
        for line in cfg.resolved_lines():
            f.write(f"# {line}\n")
        for line in extra or []:
            f.write(f"# {line}\n")
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(f"{float(v):.17g}" for v in row) + "\n")


def _out(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.out_dir, name)


def _solve_surface(cfg: RunConfig):
    grid = make_grid(z_min=cfg.z_min, z_max=cfg.z_max, n_z=cfg.n_z)
    return solve(cfg.model, grid, n_t=cfg.n_t)


def cmd_solve(cfg: RunConfig) -> list[str]:
    surface = _solve_surface(cfg)
    path = _out(cfg, "surface.csv")
    surface.to_csv(path, extra_header=cfg.resolved_lines())
    y_m = merton_fraction(cfg.model)
    summary = {
        "target_fraction": y_m,
        "value_at_target_t0": float(surface.value_at(0.0, y_m)),
        "frictionless_value_t0": merton_value(cfg.model, 0.0),
        "n_z": cfg.n_z,
        "n_t": len(surface.times) - 1,
    }
    spath = _out(cfg, "solve_summary.json")
    _write_json(spath, "illiq.solve-summary.v1", cfg, summary)
    return [path, spath]


def cmd_region(cfg: RunConfig) -> list[str]:
    surface = _solve_surface(cfg)
    region = extract_region(surface)
    t_lo_int, t_hi_int = threshold_times_integral(surface, region)
    extra = cfg.resolved_lines() + [
        f"t_lower_integral={t_lo_int!r} t_upper_integral={t_hi_int!r}"
    ]
    path = _out(cfg, "region.csv")
    write_region_csv(region, path, extra_header=extra)
    return [path]


def cmd_simulate(cfg: RunConfig) -> list[str]:
    model = cfg.model
    if cfg.sim_policy == "optimal-band":
        surface = _solve_surface(cfg)
        policy = Policy.band(extract_region(surface))
    elif cfg.sim_policy == "fixed-target":
        target = cfg.sim_target if cfg.sim_target is not None else default_initial_fraction(model)
        policy = Policy.fixed(target)
        surface = None
    else:
        policy = Policy.hold()
        surface = None
    x0 = cfg.sim_x0 if cfg.sim_x0 is not None else default_initial_fraction(model)
    result = simulate(model, policy, x0, cfg.sim_w0, cfg.sim_n_paths, cfg.sim_seed)
    payload = {
        "policy": cfg.sim_policy,
        "x0": x0,
        "w0": cfg.sim_w0,
        "mean_utility": result.mean_utility,
        "std_error": result.std_error,
        "n_paths": result.n_paths,
        "seed": result.seed,
        "terminal_wealth_mean": result.terminal_wealth_moments[0],
        "terminal_wealth_var": result.terminal_wealth_moments[1],
    }
    if surface is not None:
        scale = cfg.sim_w0 ** (1.0 - model.gamma) / (1.0 - model.gamma)
        payload["pde_value_at_start"] = float(surface.value_at(0.0, x0)) * scale
    path = _out(cfg, "simulate_result.json")
    _write_json(path, "illiq.simulate.v1", cfg, payload)
    return [path]


def cmd_asymptotics(cfg: RunConfig) -> list[str]:
    model = cfg.model
    c = cfg.sweep_c
    t = cfg.sweep_t_eval
    cont_half, cont_value = continuous_limit_coefficients(model)
    disc_target, disc_value = discrete_benchmark(model, t)
    predictions = []
    for eps in cfg.sweep_eps:
        lo, hi, val = continuous_benchmark(model, t, eps)
        predictions.append(
            {
                "eps": eps,
                "lam": c * eps ** (-2.0 / 3.0),
                "predicted_width": predicted_width(model, c, eps),
                "predicted_decrease": predicted_value_decrease(model, c, eps, t),
                "continuous_band": [lo, hi],
                "continuous_value": val,
            }
        )
    payload = {
        "c": c,
        "t_eval": t,
        "a1": a1(model, c),
        "a2": a2(model, c),
        "continuous_half_width_coeff": cont_half,
        "continuous_value_coeff": cont_value,
        "discrete_value_coeff": discrete_limit_coefficient(model),
        "discrete_benchmark_target": disc_target,
        "discrete_benchmark_value": disc_value,
        "predictions": predictions,
    }
    path = _out(cfg, "asymptotics.json")
    _write_json(path, "illiq.asymptotics.v1", cfg, payload)
    return [path]


_SWEEP_COLUMNS = (
    "eps",
    "lam",
    "t",
    "width",
    "predicted_width",
    "width_ratio",
    "value_decrease",
    "predicted_decrease",
    "value_ratio",
)


def _sweep_rows(cfg: RunConfig):
    records = sweep(
        cfg.model,
        cfg.sweep_c,
        cfg.sweep_eps,
        cfg.sweep_t_eval,
        n_z=cfg.n_z,
        n_t=cfg.n_t,
        z_min=cfg.z_min,
        z_max=cfg.z_max,
    )
    rows = [
        (
            r.eps,
            r.lam,
            r.t,
            r.width,
            r.predicted_width,
            r.width / r.predicted_width,
            r.value_decrease,
            r.predicted_decrease,
            r.value_decrease / r.predicted_decrease,
        )
        for r in records
    ]
    return rows


def cmd_sweep(cfg: RunConfig) -> list[str]:
    path = _out(cfg, "sweep.csv")
    _write_csv(path, "illiq.sweep.v1", cfg, _SWEEP_COLUMNS, _sweep_rows(cfg))
    return [path]


def cmd_figures(cfg: RunConfig) -> list[str]:
    written = []
    for fig in cfg.figures:
        if fig == "fig1":
            surface = _solve_surface(cfg)
            region = extract_region(surface)
            t_lo_int, t_hi_int = threshold_times_integral(surface, region)
            extra = cfg.resolved_lines() + [
                f"t_lower_integral={t_lo_int!r} t_upper_integral={t_hi_int!r}"
            ]
            path = _out(cfg, "fig1_region.csv")
            write_region_csv(region, path, extra_header=extra)
        elif fig == "fig2":
            path = _out(cfg, "fig2_sweep.csv")
            _write_csv(path, "illiq.sweep.v1", cfg, _SWEEP_COLUMNS, _sweep_rows(cfg))
        else:
            curve = coefficient_curve(cfg.model, np.logspace(-3.0, 3.0, 61))
            rows = zip(curve["c"], curve["a1"], curve["a2"], curve["sqrt_c_a1"], curve["c_a2"])
            path = _out(cfg, "fig3_coefficients.csv")
            _write_csv(
                path,
                "illiq.coefficients.v1",
                cfg,
                ("c", "a1", "a2", "sqrt_c_a1", "c_a2"),
                rows,
            )
        written.append(path)
    return written


_DISPATCH = {
    "solve": cmd_solve,
    "region": cmd_region,
    "simulate": cmd_simulate,
    "asymptotics": cmd_asymptotics,
    "sweep": cmd_sweep,
    "figures": cmd_figures,
}

_HELP = {
    "solve": "solve the pricing equation and write the value surface",
    "region": "extract the no-trade region and threshold times",
    "simulate": "evaluate a trading policy by Monte Carlo",
    "asymptotics": "expansion coefficients and limiting benchmarks",
    "sweep": "coupled cost/intensity sweep against the predictions",
    "figures": "write the CSV data behind the standard figures",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="illiq",
        description="Optimal investment with proportional costs and Poisson trading dates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in _HELP.items():
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to a key=value config file")
        p.add_argument("--out", default=None, help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, default=None, help="simulation seed override")
        p.add_argument("--verbose", action="store_true", help="log solver progress")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.seed is not None:
            _check_seed(args.seed)
        cfg = with_overrides(load_config(args.config), out_dir=args.out, seed=args.seed)
        os.makedirs(cfg.out_dir, exist_ok=True)
        written = _DISPATCH[args.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
