"""Acceptance suite: eight end-to-end checks at pinned tolerances.

Each test prints one PASS/FAIL line (visible with ``pytest -s``; the -v
listing gives the same per-criterion verdict).  Expensive artifacts — the
reference-market solution and the coupled sweep — are computed once per
module and shared.
"""

import math
import time

import numpy as np
import pytest

from illiq.asymptotics import (
    a1,
    a2,
    continuous_limit_coefficients,
    discrete_limit_coefficient,
    sweep,
)
from illiq.errors import ValidationError
from illiq.fk import density, fk_value
from illiq.hjb import make_grid, solve
from illiq.model import ModelParams, merton_fraction, merton_value, value_bounds
from illiq.no_trade import extract_region, foc_residual, threshold_times
from illiq.policy import Policy, simulate

REFERENCE = ModelParams(mu=0.2, sigma=1.0, gamma=0.9, T=1.0,
                        eps_buy=0.05, eps_sell=0.05, lam=3.0)
PANEL = [
    REFERENCE,
    ModelParams(mu=0.1, sigma=0.5, gamma=2.0, T=1.0, eps_buy=0.02, eps_sell=0.02, lam=5.0),
    ModelParams(mu=0.15, sigma=0.8, gamma=0.5, T=2.0, eps_buy=0.03, eps_sell=0.01, lam=4.0),
]
SEED = 20240817


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def reference_solution():
    """Reference market at default resolution, with region and thresholds."""
    start = time.perf_counter()
    surface = solve(REFERENCE, make_grid(), n_t=None)
    region = extract_region(surface)
    t_lo, t_hi = threshold_times(surface, region)
    elapsed = time.perf_counter() - start
    return {
        "surface": surface,
        "region": region,
        "t_lower": t_lo,
        "t_upper": t_hi,
        "elapsed": elapsed,
    }


@pytest.fixture(scope="module")
def coupled_sweep():
    """c = 1 sweep plus a step-halving rerun at the smallest cost."""
    start = time.perf_counter()
    eps_list = [1e-2, 3e-3, 1e-3]
    base = sweep(REFERENCE, 1.0, eps_list, 0.75, n_z=7000, n_t=1000)
    refined = sweep(REFERENCE, 1.0, [1e-3], 0.75, n_z=14000, n_t=2000)
    elapsed = time.perf_counter() - start
    return {"base": base, "refined": refined[0], "elapsed": elapsed}


def test_criterion_1_reference_no_trade_region(reference_solution):
    """Band brackets the target; trading shuts down late in the horizon."""
    region = reference_solution["region"]
    t_lo, t_hi = reference_solution["t_lower"], reference_solution["t_upper"]
    y_m = merton_fraction(REFERENCE)
    lo0, hi0 = region.at(0.0)
    dt = reference_solution["surface"].dt

    brackets = lo0 < y_m < hi0
    window = (REFERENCE.T - 0.5 < t_lo < REFERENCE.T) and (REFERENCE.T - 0.5 < t_hi < REFERENCE.T)
    sel_lo = region.times >= t_lo + 0.5 * dt
    sel_hi = region.times >= t_hi + 0.5 * dt
    pinned = bool(np.all(region.lower[sel_lo] == 0.0) and np.all(region.upper[sel_hi] == 1.0))
    fast = reference_solution["elapsed"] < 30.0

    _verdict(
        "criterion 1 (reference no-trade region)",
        brackets and window and pinned and fast,
        f"band(0)=[{lo0:.4f},{hi0:.4f}] around {y_m:.4f}; "
        f"thresholds=({t_lo:.4f},{t_hi:.4f}); pinned={pinned}; "
        f"{reference_solution['elapsed']:.1f}s",
    )


def test_criterion_2_threshold_times_scale_linearly():
    """T - threshold ~ eps: log-log slopes within 1 +/- 0.2."""
    from dataclasses import replace

    eps_levels = [0.05, 0.02, 0.01, 0.005]
    gaps_lo, gaps_hi = [], []
    for eps in eps_levels:
        p = replace(REFERENCE, eps_buy=eps, eps_sell=eps)
        n_t = max(2000, math.ceil(40.0 / eps))
        surface = solve(p, make_grid(n_z=2000), n_t=n_t)
        region = extract_region(surface)
        t_lo, t_hi = threshold_times(surface, region)
        gaps_lo.append(p.T - t_lo)
        gaps_hi.append(p.T - t_hi)
    log_eps = np.log(eps_levels)
    slope_lo = float(np.polyfit(log_eps, np.log(gaps_lo), 1)[0])
    slope_hi = float(np.polyfit(log_eps, np.log(gaps_hi), 1)[0])
    ok = abs(slope_lo - 1.0) <= 0.2 and abs(slope_hi - 1.0) <= 0.2
    _verdict(
        "criterion 2 (threshold scaling in cost)",
        ok,
        f"slopes: lower {slope_lo:.3f}, upper {slope_hi:.3f} (want 1 +/- 0.2)",
    )


def test_criterion_3_width_matches_unified_prediction(coupled_sweep):
    """width / (2 a1(1) eps^(1/3)) -> 1 along the coupled path."""
    ratios = [r.width / r.predicted_width for r in coupled_sweep["base"]]
    errs = [abs(r - 1.0) for r in ratios]
    monotone = all(errs[i + 1] <= errs[i] + 1e-12 for i in range(len(errs) - 1))
    close = errs[-1] <= 0.25
    fine = coupled_sweep["refined"]
    guard = abs(fine.width / fine.predicted_width - ratios[-1]) <= 0.05 * ratios[-1]
    fast = coupled_sweep["elapsed"] < 600.0
    _verdict(
        "criterion 3 (band width along the coupled path)",
        monotone and close and guard and fast,
        f"ratios={[f'{r:.4f}' for r in ratios]}; refined={fine.width / fine.predicted_width:.4f}; "
        f"{coupled_sweep['elapsed']:.1f}s",
    )


def test_criterion_4_value_decrease_matches_unified_prediction(coupled_sweep):
    """(v0 - v) / (a2(1) v0 (T-t) eps^(2/3)) -> 1 along the coupled path."""
    ratios = [r.value_decrease / r.predicted_decrease for r in coupled_sweep["base"]]
    errs = [abs(r - 1.0) for r in ratios]
    monotone = all(errs[i + 1] <= errs[i] + 1e-12 for i in range(len(errs) - 1))
    close = errs[-1] <= 0.30
    fine = coupled_sweep["refined"]
    guard = abs(fine.value_decrease / fine.predicted_decrease - ratios[-1]) <= 0.05 * ratios[-1]
    fast = coupled_sweep["elapsed"] < 600.0
    _verdict(
        "criterion 4 (value shortfall along the coupled path)",
        monotone and close and guard and fast,
        f"ratios={[f'{r:.4f}' for r in ratios]}; "
        f"refined={fine.value_decrease / fine.predicted_decrease:.4f}; "
        f"{coupled_sweep['elapsed']:.1f}s",
    )


def test_criterion_5_coefficients_bridge_both_limits():
    """a1, a2 reach the continuous limit; c*a2 reaches the discrete limit."""
    start = time.perf_counter()
    half, value = continuous_limit_coefficients(REFERENCE)
    err_a1 = abs(a1(REFERENCE, 1e9) / half - 1.0)
    err_a2 = abs(a2(REFERENCE, 1e9) / value - 1.0)
    err_disc = abs(1e-9 * a2(REFERENCE, 1e-9) / discrete_limit_coefficient(REFERENCE) - 1.0)
    vanishing = math.sqrt(1e-9) * a1(REFERENCE, 1e-9)
    elapsed = time.perf_counter() - start
    ok = err_a1 <= 1e-3 and err_a2 <= 1e-3 and err_disc <= 1e-3 and vanishing <= 1e-3 \
        and elapsed < 1.0
    _verdict(
        "criterion 5 (bridge between friction regimes)",
        ok,
        f"rel errs: a1 {err_a1:.2e}, a2 {err_a2:.2e}, c*a2 {err_disc:.2e}; "
        f"sqrt(c)*a1 {vanishing:.1e}; {elapsed * 1e3:.0f}ms",
    )


def test_criterion_6_stochastic_representation_matches_solver(reference_solution):
    """Independent quadrature of the jump representation agrees with the PDE."""
    surface = reference_solution["surface"]
    region = reference_solution["region"]
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        t = float(rng.uniform(0.05, 0.95))
        x = float(rng.uniform(0.02, 0.98))
        via_pde = surface.value_at(t, x)
        via_quad = fk_value(surface, region, t, x)
        worst = max(worst, abs(via_quad - via_pde) / abs(via_pde))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and elapsed < 120.0
    _verdict(
        "criterion 6 (dual route to the value)",
        ok,
        f"max rel err {worst:.2e} over 20 points; {elapsed:.1f}s",
    )


def test_criterion_7_monte_carlo_confirms_policy_optimality(reference_solution):
    """Band policy attains the solver value and beats simpler policies."""
    surface = reference_solution["surface"]
    region = reference_solution["region"]
    y_m = merton_fraction(REFERENCE)
    n = 1_000_000
    start = time.perf_counter()
    band, pb = simulate(REFERENCE, Policy.band(region), y_m, 1.0, n, SEED, keep_paths=True)
    _, ph = simulate(REFERENCE, Policy.hold(), y_m, 1.0, n, SEED, keep_paths=True)
    _, pf = simulate(REFERENCE, Policy.fixed(y_m), y_m, 1.0, n, SEED, keep_paths=True)
    elapsed = time.perf_counter() - start

    target = surface.value_at(0.0, y_m) / (1.0 - REFERENCE.gamma)
    z_value = (band.mean_utility - target) / band.std_error

    def _gap_z(other):
        d = pb["utility"] - other["utility"]
        return float(d.mean() / (d.std(ddof=1) / math.sqrt(n)))

    z_hold = _gap_z(ph)
    z_fixed = _gap_z(pf)
    ok = abs(z_value) <= 3.0 and z_hold >= -3.0 and z_fixed >= -3.0 and elapsed < 300.0
    _verdict(
        "criterion 7 (Monte Carlo policy check)",
        ok,
        f"band vs solver z={z_value:+.2f}; dominance z: hold {z_hold:+.1f}, "
        f"always-rebalance {z_fixed:+.1f}; {elapsed:.1f}s",
    )


def test_criterion_8_invariants_across_markets():
    """Structural invariants on a three-market panel (includes gamma > 1)."""
    from dataclasses import replace

    checks = []
    for p in PANEL:
        n_t = 600 if p.T <= 1.0 else 1200
        grid = make_grid(n_z=1200)
        surface = solve(p, grid, n_t=n_t)
        region = extract_region(surface)
        sgn = 1.0 - p.gamma
        u0 = surface.values[-1] / sgn

        checks.append(("terminal", bool(np.all(surface.values[0] == 1.0))))
        lo, hi = value_bounds(p)
        checks.append(("bounds", bool(
            surface.values.min() >= lo - 1e-9 and surface.values.max() <= hi + 1e-9)))

        x = grid.x
        xm, x0, xp = x[1:-3], x[2:-2], x[3:-1]
        um, uc, up = u0[1:-3], u0[2:-2], u0[3:-1]
        d2 = 2 * (um / ((x0 - xm) * (xp - xm)) - uc / ((x0 - xm) * (xp - x0))
                  + up / ((xp - x0) * (xp - xm)))
        checks.append(("concavity", bool(d2.max() <= 1e-8 * np.abs(u0).max())))

        checks.append(("ordering", bool(np.all(region.lower <= region.upper + 1e-12))))

        row0 = surface.values[-1]
        scale = np.abs(row0).max()
        foc_ok = True
        for side, y in (("buy", region.lower[-1]), ("sell", region.upper[-1])):
            if 0.0 < y < 1.0:
                foc_ok &= abs(foc_residual(row0, grid, p, y, side)) <= 1e-8 * scale
        checks.append(("first-order conditions", bool(foc_ok)))

        dear = solve(replace(p, eps_buy=2 * p.eps_buy, eps_sell=2 * p.eps_sell),
                     grid, n_t=n_t).values[-1] / sgn
        fast = solve(replace(p, lam=2 * p.lam), grid, n_t=n_t).values[-1] / sgn
        checks.append(("monotone in cost", bool(np.all(dear <= u0 + 1e-10))))
        checks.append(("monotone in intensity", bool(np.all(fast >= u0 - 1e-10))))

        z = np.linspace(-30.0, 30.0, 40_001)
        y = 1.0 / (1.0 + np.exp(-z))
        mass = np.trapezoid(density(p, 0.3, 0.5 * p.T, y) * y * (1.0 - y), z)
        checks.append(("density normalization", bool(abs(mass - 1.0) <= 1e-8)))

        r1 = simulate(p, Policy.band(region), merton_fraction(p), 1.0, 2000, SEED)
        r2 = simulate(p, Policy.band(region), merton_fraction(p), 1.0, 2000, SEED)
        checks.append(("seeded reproducibility", r1 == r2))

    failed = [name for name, ok in checks if not ok]
    _verdict(
        "criterion 8 (invariant panel)",
        not failed,
        f"{len(checks)} checks over {len(PANEL)} markets"
        + (f"; failed: {failed}" if failed else ""),
    )


def test_solver_rejects_degenerate_risk_aversion():
    """Sanity on the advertised failure mode: gamma ~ 1 is refused loudly."""
    p = ModelParams(mu=0.2, sigma=1.0, gamma=1.0005, T=1.0,
                    eps_buy=0.05, eps_sell=0.05, lam=3.0)
    with pytest.raises(ValidationError):
        solve(p, make_grid(n_z=100), n_t=50)
