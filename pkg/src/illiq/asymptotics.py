"""Small-cost expansions along the coupling lam = c * eps^(-2/3).

For small proportional cost eps the no-trade region is an interval of width
O(eps^(1/3)) around the frictionless target, and the value function falls
short of the frictionless value by O(eps^(2/3)).  When the trading intensity
is coupled to the cost through lam = c * eps^(-2/3) both effects carry
coefficients that depend only on c:

    width(eps)         ~ 2 * a1(c) * eps^(1/3)
    v0(t) - v(t, y_M)  ~ a2(c) * v0(t) * (T - t) * eps^(2/3)

where v0 is the frictionless value and y_M the frictionless target fraction.
As c -> infinity the coefficients converge to the constants of the
continuous-trading small-cost expansion; as c -> 0 (costs dominate) the
sqrt(c)*a1 and c*a2 rescalings converge to the constants of the
discrete-trading expansion at fixed cost.  This module evaluates a1, a2, the
two limiting benchmarks, and runs the numerical sweep that compares the
predictions against the PDE solver.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .hjb import ValueSurface, make_grid, solve
from .model import ModelParams, merton_fraction, merton_value
from .no_trade import extract_region

__all__ = [
    "a1",
    "a2",
    "coupling_c",
    "continuous_limit_coefficients",
    "discrete_limit_coefficient",
    "continuous_benchmark",
    "discrete_benchmark",
    "predicted_width",
    "predicted_value_decrease",
    "SweepRecord",
    "sweep",
    "coefficient_curve",
]

log = logging.getLogger(__name__)


def _geometry(params: ModelParams) -> tuple[float, float]:
    """(y_M, y_M * (1 - y_M)), validated to be an interior target."""
    y = merton_fraction(params)
    if not 0.0 < y < 1.0:
        raise ValidationError(
            f"asymptotic coefficients require a frictionless target in (0, 1), got {y}"
        )
    return y, y * (1.0 - y)


def _check_c(c: float) -> float:
    c = float(c)
    if not (math.isfinite(c) and c > 0.0):
        raise ValidationError(f"coupling constant c must be positive and finite, got {c}")
    return c


def coupling_c(eps: float, lam: float) -> float:
    """The coupling constant c = lam * eps^(2/3)."""
    if not eps > 0.0 or not lam > 0.0:
        raise ValidationError(f"eps and lam must be positive, got eps={eps}, lam={lam}")
    return lam * eps ** (2.0 / 3.0)


def a1(params: ModelParams, c: float) -> float:
    """Half-width coefficient: band ~ y_M +/- a1(c) * eps^(1/3).

    a1(c) = sigma*g/sqrt(2c) * ((1 + K*c^(3/2))^(1/3) - 1) with
    g = y_M(1-y_M) and K = 3*sqrt(2)/(gamma*sigma^3*g).  Evaluated through
    expm1(log1p(.)/3) so the c -> 0 cancellation is computed stably.
    """
    c = _check_c(c)
    _, g = _geometry(params)
    sig = params.sigma
    K = 3.0 * math.sqrt(2.0) / (params.gamma * sig**3 * g)
    delta = K * c**1.5
    return sig * g / math.sqrt(2.0 * c) * math.expm1(math.log1p(delta) / 3.0)


def a2(params: ModelParams, c: float) -> float:
    """Value-decrease coefficient: v0 - v ~ a2(c) * v0 * (T-t) * eps^(2/3).

    a2(c) = gamma*(1-gamma)*sigma^4*g^2/(4c) * ((1 + K*c^(3/2))^(2/3) + 1).
    Negative for gamma > 1, where values are negative and the shortfall
    v0 - v is negative as well; a2 / (1 - gamma) is positive either way.
    """
    c = _check_c(c)
    _, g = _geometry(params)
    sig = params.sigma
    K = 3.0 * math.sqrt(2.0) / (params.gamma * sig**3 * g)
    delta = K * c**1.5
    outer = math.exp(2.0 / 3.0 * math.log1p(delta)) + 1.0
    return params.gamma * (1.0 - params.gamma) * sig**4 * g * g / (4.0 * c) * outer


def continuous_limit_coefficients(params: ModelParams) -> tuple[float, float]:
    """(half-width, value) coefficients of the continuous-trading expansion.

    lim_{c->inf} a1(c) = (12 g^2 / gamma)^(1/3) / 2 and
    lim_{c->inf} a2(c) = (1-gamma)*gamma*sigma^2/8 * (12 g^2 / gamma)^(2/3),
    the classical transaction-cost-only constants.
    """
    _, g = _geometry(params)
    base = (12.0 * g * g / params.gamma) ** (1.0 / 3.0)
    half = 0.5 * base
    value = (1.0 - params.gamma) * params.gamma * params.sigma**2 / 8.0 * base * base
    return half, value


def discrete_limit_coefficient(params: ModelParams) -> float:
    """lim_{c->0} c * a2(c) = (1-gamma)*gamma*sigma^4*g^2/2.

    The cost-free discrete-trading expansion: v0 - v ~ coeff * v0 * (T-t)/lam
    as lam -> infinity with eps = 0.  (sqrt(c)*a1 -> 0: without costs the
    band collapses to the target.)
    """
    _, g = _geometry(params)
    return (1.0 - params.gamma) * params.gamma * params.sigma**4 * g * g / 2.0


def continuous_benchmark(params: ModelParams, t: float, eps: float) -> tuple[float, float, float]:
    """(y_lo, y_hi, value at y_M) of the continuous-trading expansion at cost eps."""
    if not eps > 0.0:
        raise ValidationError(f"eps must be positive, got {eps}")
    y, _ = _geometry(params)
    half, value = continuous_limit_coefficients(params)
    v0 = merton_value(params, t)
    h = half * eps ** (1.0 / 3.0)
    return y - h, y + h, v0 - value * v0 * (params.T - t) * eps ** (2.0 / 3.0)


def discrete_benchmark(params: ModelParams, t: float) -> tuple[float, float]:
    """(target, value at y_M) of the cost-free discrete-trading expansion.

    Uses the intensity stored in ``params``: the optimal rebalancing target
    is shifted off y_M by a skew term of order 1/lam, and the value falls
    short of the frictionless value by coeff * v0 * (T-t) / lam.
    """
    y, g = _geometry(params)
    v0 = merton_value(params, t)
    shift = params.sigma**2 * g * (2.0 * y - 1.0) / params.lam
    coeff = discrete_limit_coefficient(params)
    return y + shift, v0 - coeff * v0 * (params.T - t) / params.lam


def predicted_width(params: ModelParams, c: float, eps: float) -> float:
    """Predicted no-trade width 2 * a1(c) * eps^(1/3)."""
    if not eps > 0.0:
        raise ValidationError(f"eps must be positive, got {eps}")
    return 2.0 * a1(params, c) * eps ** (1.0 / 3.0)


def predicted_value_decrease(params: ModelParams, c: float, eps: float, t: float) -> float:
    """Predicted shortfall (v0 - v)/(1-gamma) at y_M, in utility scale."""
    if not eps > 0.0:
        raise ValidationError(f"eps must be positive, got {eps}")
    v0 = merton_value(params, t)
    raw = a2(params, c) * v0 * (params.T - t) * eps ** (2.0 / 3.0)
    return raw / (1.0 - params.gamma)


@dataclass(frozen=True)
class SweepRecord:
    """One (eps, lam) point of the coupled sweep.

    ``value_decrease`` and ``predicted_decrease`` are in utility scale
    (divided by 1-gamma) so they are positive for every gamma.
    """

    eps: float
    lam: float
    t: float
    width: float
    value_decrease: float
    predicted_width: float
    predicted_decrease: float


def _sweep_grid(params: ModelParams, c: float, eps: float, n_z: int | None,
                z_min: float, z_max: float):
    """Grid fine enough to resolve an O(eps^(1/3)) band: ~80 cells across it."""
    y, g = _geometry(params)
    width_z = 2.0 * a1(params, c) * eps ** (1.0 / 3.0) / g
    need = int(math.ceil(80.0 * (z_max - z_min) / width_z))
    n = max(n_z if n_z is not None else 4000, need)
    return make_grid(z_min=z_min, z_max=z_max, n_z=n)


def sweep(
    params: ModelParams,
    c: float,
    eps_list,
    t_eval: float,
    n_z: int | None = None,
    n_t: int | None = None,
    z_min: float = -12.0,
    z_max: float = 12.0,
) -> list[SweepRecord]:
    """Solve along lam = c * eps^(-2/3) and compare with the predictions.

    For each eps the stored cost/intensity fields of ``params`` are replaced
    by (eps, eps, c * eps^(-2/3)); the other market fields are kept.  The
    width and value shortfall are read at the solver time level nearest
    ``t_eval``, so measured and predicted quantities use the same time.
    """
    c = _check_c(c)
    eps_values = [float(e) for e in eps_list]
    if not eps_values:
        raise ValidationError("eps_list must contain at least one cost level")
    if not 0.0 <= t_eval < params.T:
        raise ValidationError(f"t_eval must lie in [0, T), got {t_eval}")
    y_m, _ = _geometry(params)

    records = []
    for eps in eps_values:
        lam = c * eps ** (-2.0 / 3.0)
        p = replace(params, eps_buy=eps, eps_sell=eps, lam=lam)
        grid = _sweep_grid(p, c, eps, n_z, z_min, z_max)
        surface = solve(p, grid, n_t=n_t)
        region = extract_region(surface)
        k = int(np.argmin(np.abs(surface.times - t_eval)))
        t_k = float(surface.times[k])
        width = float(region.upper[k] - region.lower[k])
        v0 = merton_value(p, t_k)
        decrease = (v0 - float(surface.value_at(t_k, y_m))) / (1.0 - p.gamma)
        rec = SweepRecord(
            eps=eps,
            lam=lam,
            t=t_k,
            width=width,
            value_decrease=decrease,
            predicted_width=predicted_width(p, c, eps),
            predicted_decrease=predicted_value_decrease(p, c, eps, t_k),
        )
        log.info(
            "sweep eps=%g lam=%g: width ratio %.4f, value ratio %.4f",
            eps, lam, rec.width / rec.predicted_width,
            rec.value_decrease / rec.predicted_decrease,
        )
        records.append(rec)
    return records


def coefficient_curve(params: ModelParams, c_values) -> dict[str, np.ndarray]:
    """a1, a2 and their bridge rescalings over an array of coupling constants.

    Returns arrays ``c``, ``a1``, ``a2``, ``sqrt_c_a1`` and ``c_a2``; the
    last two converge to 0 and to the discrete-trading constant as c -> 0,
    while ``a1`` and ``a2`` converge to the continuous-trading constants as
    c -> infinity.
    """
    c_arr = np.asarray(list(c_values), dtype=np.float64)
    if c_arr.size == 0 or not np.all(c_arr > 0.0):
        raise ValidationError("c_values must be a non-empty collection of positive numbers")
    a1_arr = np.array([a1(params, c) for c in c_arr])
    a2_arr = np.array([a2(params, c) for c in c_arr])
    return {
        "c": c_arr,
        "a1": a1_arr,
        "a2": a2_arr,
        "sqrt_c_a1": np.sqrt(c_arr) * a1_arr,
        "c_a2": c_arr * a2_arr,
    }
