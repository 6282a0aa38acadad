"""Independent quadrature check of the value surface.

Between trading times the stock fraction follows the explicit flow

    Y_s = x A / (x A + 1 - x),   A = exp((mu - sigma^2/2)(s-t) + sigma (B_s - B_t)),

and the wealth-growth weight is Z_s = (x A + 1 - x)^{1-gamma}
= ((1-x)/(1-Y_s))^{1-gamma}.  Conditioning on the first trading time gives
the representation

    v(t, x) = e^{-lam (T-t)} E[Z_T]
              + lam int_t^T e^{-lam (s-t)} E[Z_s L(s, Y_s)] ds,

and differentiating in x,

    v_x(t, x) = e^{-lam (T-t)} E[dZ_T/dx]
                + lam int_t^T e^{-lam (s-t)}
                      E[Z_s L_x(s, Y_s) dY_s/dx + dZ_s/dx L(s, Y_s)] ds,

with dY/dx = y(1-y)/(x(1-x)) and dZ/dx = (1-gamma)(y-x)/(x(1-y))
* ((1-x)/(1-y))^{-gamma} evaluated at y = Y_s.

This module evaluates both right-hand sides by deterministic quadrature,
sharing nothing with the finite-difference stepper except the surface values
it reads, so agreement between the two is a meaningful mutual check.

Quadrature layout: the time integral is mapped to u = lam (s-t), truncated
at u = 40, and integrated with Gauss-Legendre panels on a dyadic subdivision
clustered at u = 0; the inner law of Y_s is Gaussian in the logit coordinate,
integrated with Gauss-Legendre on a +-10 sigma sqrt(s-t) window split at the
band edges (where L has kinks).  E[Z] itself is the lognormal-moment
integral, evaluated with Gauss-Hermite in the Gaussian increment; it reduces
to the exact closed forms 1 at x = 0 and exp((1-gamma)(mu - gamma sigma^2/2)
(s-t)) at x = 1.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit, logit

from .errors import ValidationError
from .hjb import ValueSurface, compute_L, compute_Lx
from .model import ModelParams
from .no_trade import NoTradeRegion

__all__ = ["density", "expected_z", "expected_z_dx", "fk_value", "fk_deriv"]

_GL_TIME = np.polynomial.legendre.leggauss(32)
_GL_SPACE = np.polynomial.legendre.leggauss(48)
_GH = np.polynomial.hermite_e.hermegauss(160)
_U_CUTOFF = 40.0
_N_PANELS = 11  # dyadic panels [0, U/2^10], [U/2^10, U/2^9], ..., [U/2, U]


def density(params: ModelParams, x: float, tau: float, y) -> np.ndarray:
    """Transition density of the untraded fraction, started at x, horizon tau.

    logit(Y) is Gaussian with mean logit(x) + (mu - sigma^2/2) tau and
    variance sigma^2 tau, so

        phi(y) = exp(-(logit(y) - logit(x) - (mu - sigma^2/2) tau)^2
                     / (2 sigma^2 tau)) / (sigma y (1-y) sqrt(2 pi tau)).
    """
    if not (0.0 < x < 1.0) or not (tau > 0.0):
        raise ValidationError("density needs 0 < x < 1 and tau > 0")
    y = np.asarray(y, dtype=float)
    mean = logit(x) + (params.mu - 0.5 * params.sigma**2) * tau
    var = params.sigma**2 * tau
    zq = logit(y)
    return np.exp(-((zq - mean) ** 2) / (2.0 * var)) / (
        params.sigma * y * (1.0 - y) * math.sqrt(2.0 * math.pi * tau)
    )


def expected_z(params: ModelParams, x: float, tau: float) -> float:
    """E[(x A + 1 - x)^{1-gamma}] over the lognormal growth factor A."""
    if tau < 0.0 or not (0.0 <= x <= 1.0):
        raise ValidationError("expected_z needs x in [0, 1] and tau >= 0")
    if tau == 0.0 or x == 0.0:
        return 1.0
    g1 = 1.0 - params.gamma
    m = (params.mu - 0.5 * params.sigma**2) * tau
    s = params.sigma * math.sqrt(tau)
    if x == 1.0:
        # exact lognormal moment E[A^{1-gamma}]
        return math.exp(g1 * m + 0.5 * g1**2 * s**2)
    nodes, weights = _GH
    a = np.exp(m + s * nodes)
    vals = (x * a + 1.0 - x) ** g1
    return float(weights @ vals / math.sqrt(2.0 * math.pi))


def expected_z_dx(params: ModelParams, x: float, tau: float) -> float:
    """E[(1-gamma)(A - 1)(x A + 1 - x)^{-gamma}], the x-derivative of E[Z]."""
    if tau < 0.0 or not (0.0 <= x <= 1.0):
        raise ValidationError("expected_z_dx needs x in [0, 1] and tau >= 0")
    if tau == 0.0:
        return 0.0
    g = params.gamma
    m = (params.mu - 0.5 * params.sigma**2) * tau
    s = params.sigma * math.sqrt(tau)
    nodes, weights = _GH
    a = np.exp(m + s * nodes)
    vals = (1.0 - g) * (a - 1.0) * (x * a + 1.0 - x) ** (-g)
    return float(weights @ vals / math.sqrt(2.0 * math.pi))


def _panel_nodes(u_max: float):
    """Gauss-Legendre nodes/weights on dyadic panels of [0, u_max]."""
    edges = [0.0] + [u_max * 2.0 ** (-k) for k in range(_N_PANELS - 1, -1, -1)]
    gl_x, gl_w = _GL_TIME
    us, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        us.append(a + half * (gl_x + 1.0))
        ws.append(half * gl_w)
    return np.concatenate(us), np.concatenate(ws)


def _segments(center: float, halfwidth: float, cuts: list[float]):
    """Split [center-halfwidth, center+halfwidth] at interior cut points."""
    lo, hi = center - halfwidth, center + halfwidth
    pts = [lo] + sorted(c for c in cuts if lo < c < hi) + [hi]
    return list(zip(pts[:-1], pts[1:]))


def _inner_expectation(
    surface: ValueSurface,
    region: NoTradeRegion,
    params: ModelParams,
    t: float,
    x: float,
    s: float,
    with_deriv: bool,
) -> float:
    """E[Z_s L(s, Y_s)] (or the derivative integrand) by logit quadrature."""
    tau_s = s - t
    grid = surface.grid
    row = surface._blend(s)
    band = region.at(s)
    g1 = 1.0 - params.gamma

    if tau_s < 1e-13:
        if with_deriv:
            return float(compute_Lx(row, grid, params, band, x))
        return float(compute_L(row, grid, params, band, x))

    zx = float(logit(x))
    mean = zx + (params.mu - 0.5 * params.sigma**2) * tau_s
    sd = params.sigma * math.sqrt(tau_s)
    cuts = []
    if band[0] > 0.0:
        cuts.append(float(logit(band[0])))
    if band[1] < 1.0:
        cuts.append(float(logit(band[1])))

    gl_x, gl_w = _GL_SPACE
    total = 0.0
    for a, b in _segments(mean, 10.0 * sd, cuts):
        half = 0.5 * (b - a)
        zeta = a + half * (gl_x + 1.0)
        y = expit(zeta)
        normal = np.exp(-((zeta - mean) ** 2) / (2.0 * sd * sd)) / (sd * math.sqrt(2.0 * math.pi))
        zfac = ((1.0 - x) / (1.0 - y)) ** g1
        if with_deriv:
            lx = compute_Lx(row, grid, params, band, y)
            lv = compute_L(row, grid, params, band, y)
            dydx = y * (1.0 - y) / (x * (1.0 - x))
            dzdx = g1 * (y - x) / (x * (1.0 - y)) * ((1.0 - x) / (1.0 - y)) ** (-params.gamma)
            integrand = zfac * dydx * lx + dzdx * lv
        else:
            integrand = zfac * compute_L(row, grid, params, band, y)
        total += float((half * gl_w * normal) @ integrand)
    return total


def _fk(surface: ValueSurface, region: NoTradeRegion, t: float, x: float, with_deriv: bool) -> float:
    p = surface.params
    if not (0.0 < x < 1.0):
        raise ValidationError(f"x must lie in (0, 1), got {x}")
    if not (0.0 <= t <= p.T):
        raise ValidationError(f"t must lie in [0, T], got {t}")
    tau = p.T - t
    if tau == 0.0:
        return 0.0 if with_deriv else 1.0

    terminal = expected_z_dx(p, x, tau) if with_deriv else expected_z(p, x, tau)
    out = math.exp(-p.lam * tau) * terminal

    u_max = min(p.lam * tau, _U_CUTOFF)
    us, ws = _panel_nodes(u_max)
    for u, w in zip(us, ws):
        s = t + u / p.lam
        out += w * math.exp(-u) * _inner_expectation(surface, region, p, t, x, s, with_deriv)
    return out


def fk_value(surface: ValueSurface, region: NoTradeRegion, t: float, x: float) -> float:
    """v(t, x) from the first-trading-time representation (quadrature only)."""
    return _fk(surface, region, t, x, with_deriv=False)


def fk_deriv(surface: ValueSurface, region: NoTradeRegion, t: float, x: float) -> float:
    """v_x(t, x) from the differentiated representation (quadrature only)."""
    return _fk(surface, region, t, x, with_deriv=True)
