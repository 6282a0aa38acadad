"""No-trade region: extraction from value slices and threshold times.

At a trading time the investor moves the stock fraction x to the nearest
point of a band [y_lo(t), y_hi(t)].  The band edges maximise the rebalancing
transforms of the utility-scale value u := v/(1-gamma):

    y_lo = argmax_y u(t, y) * (1 + eps_buy  * y)^(gamma - 1)
    y_hi = argmax_y u(t, y) * (1 - eps_sell * y)^(gamma - 1)

(working in u makes the maximisation correct for gamma on either side of 1).
Interior maximisers satisfy the first-order conditions

    v_x/(1-gamma) =  eps_buy  * v / (1 + eps_buy  * y)   at y_lo,
    v_x/(1-gamma) = -eps_sell * v / (1 - eps_sell * y)   at y_hi.

Near the horizon both transforms are monotone and the band fills [0, 1]:
y_lo == 0 after a threshold time t_lo, y_hi == 1 after t_hi.  Both thresholds
also solve scalar integral equations in the boundary curves; those are
evaluated here on the surface's native time grid and reconciled against the
direct grid-scan estimates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConcavityError, ValidationError
from .hjb import SpatialGrid, ValueSurface, _interp_row, _interp_row_quad
from .model import ModelParams

__all__ = [
    "NoTradeRegion",
    "extract_boundaries",
    "extract_region",
    "threshold_times",
    "threshold_times_integral",
    "foc_residual",
    "write_region_csv",
]

log = logging.getLogger(__name__)

# Guard band for declaring a boundary pinned at an endpoint from the
# one-sided first-order condition there.
_ENDPOINT_TOL = 1e-10


def _check_unimodal(f: np.ndarray, what: str) -> None:
    """Raise if f has more than one discrete slope sign change.

    Slopes within 1e-13 of zero (relative to max|f|) are ignored so that
    flat stretches (e.g. the terminal slice at zero cost) do not trip the
    check through float noise.
    """
    d = np.diff(f)
    tol = 1e-13 * float(np.max(np.abs(f)))
    s = np.sign(d) * (np.abs(d) > tol)
    s = s[s != 0]
    if s.size and np.any(np.diff(s) > 0):
        raise ConcavityError(f"slice is not unimodal under the {what} transform")


def _quad_model(row: np.ndarray, grid: SpatialGrid, q: int):
    """Coefficients of the z-quadratic through z-nodes q-1, q, q+1.

    Returns (z0, a, b, c) with v(z) ~= a + b*s + c*s^2, s = (z - z0)/dz.
    """
    f = q + 1
    vm, v0, vp = row[f - 1], row[f], row[f + 1]
    return grid.z[q], v0, 0.5 * (vp - vm), 0.5 * (vp - 2.0 * v0 + vm)


def _foc_sign(z: float, model, grid: SpatialGrid, params: ModelParams, side: str) -> float:
    """Sign function whose root is the band edge, positive left of it.

    side='buy':  psi = u_x * (1 + eps_buy  * x) - (1-gamma) * eps_buy  * u
    side='sell': psi = u_x * (1 - eps_sell * x) + (1-gamma) * eps_sell * u

    psi is the derivative of the corresponding transform up to a positive
    factor, for either gamma regime.  u is the local quadratic model of
    v/(1-gamma) in z; u_x = u'(z)/(x(1-x)).
    """
    z0, a, b, c = model
    g1 = 1.0 - params.gamma
    s = (z - z0) / grid.dz
    u = (a + b * s + c * s * s) / g1
    du_dz = (b + 2.0 * c * s) / (grid.dz * g1)
    x = 1.0 / (1.0 + math.exp(-z))
    u_x = du_dz / (x * (1.0 - x))
    if side == "buy":
        return u_x * (1.0 + params.eps_buy * x) - g1 * params.eps_buy * u
    return u_x * (1.0 - params.eps_sell * x) + g1 * params.eps_sell * u


def _refine(row, grid, params, q: int, side: str) -> float:
    """Bisection on the first-order condition inside cell (q-1, q+1).

    q is the z-node index of the grid argmax; tolerance 1e-12 in the
    fraction.  Falls back to the grid argmax if the local model does not
    bracket a sign change (near-flat transform).
    """
    model = _quad_model(row, grid, q)
    za, zb = grid.z[q - 1], grid.z[q + 1]
    fa = _foc_sign(za, model, grid, params, side)
    fb = _foc_sign(zb, model, grid, params, side)
    if not (fa > 0.0 > fb):
        return float(grid.x[q + 1])
    # bisection in z until the fraction moves by < 1e-12
    for _ in range(80):
        zm = 0.5 * (za + zb)
        if _foc_sign(zm, model, grid, params, side) > 0.0:
            za = zm
        else:
            zb = zm
        xa = 1.0 / (1.0 + math.exp(-za))
        xb = 1.0 / (1.0 + math.exp(-zb))
        if xb - xa < 1e-12:
            break
    zm = 0.5 * (za + zb)
    return 1.0 / (1.0 + math.exp(-zm))


def extract_boundaries(
    row: np.ndarray,
    grid: SpatialGrid,
    params: ModelParams,
    powers: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[float, float]:
    """Band edges (y_lo, y_hi) of one value slice.

    Grid argmax of the rebalancing transforms, refined by bisection on the
    first-order condition within the bracketing cell (tolerance 1e-12).
    A boundary is declared pinned at an endpoint when the one-sided
    first-order condition there fails by less than 1e-10:

        y_lo = 0  iff  v_x(0+)/(1-gamma) <= eps_buy * v(0) + 1e-10,
        y_hi = 1  iff  v_x(1-)/(1-gamma) >= -eps_sell * v(1)/(1-eps_sell) - 1e-10.

    powers: optional precomputed ((1+eps_buy x)^(gamma-1), (1-eps_sell x)^(gamma-1)).
    """
    g1 = 1.0 - params.gamma
    u = row / g1
    if powers is None:
        pb = (1.0 + params.eps_buy * grid.x) ** (params.gamma - 1.0)
        ps = (1.0 - params.eps_sell * grid.x) ** (params.gamma - 1.0)
    else:
        pb, ps = powers
    f_b = u * pb
    f_s = u * ps
    _check_unimodal(f_b, "buy")
    _check_unimodal(f_s, "sell")

    n = grid.n_z
    x1 = grid.x[1]
    x_last = grid.x[-2]
    # one-sided utility-scale derivatives at the endpoints
    ux0 = (row[1] - row[0]) / (g1 * x1)
    ux1 = (row[-1] - row[-2]) / (g1 * (1.0 - x_last))

    jb = int(np.argmax(f_b))
    if jb == 0 or (jb == 1 and ux0 <= params.eps_buy * row[0] + _ENDPOINT_TOL):
        y_lo = 0.0
    elif jb == n + 1:
        y_lo = 1.0
    elif jb == 1 or jb == n:
        y_lo = float(grid.x[jb])
    else:
        y_lo = _refine(row, grid, params, jb - 1, "buy")

    js = int(np.argmax(f_s))
    pinned_hi = ux1 >= -params.eps_sell * row[-1] / (1.0 - params.eps_sell) - _ENDPOINT_TOL
    if js == n + 1 or (js == n and pinned_hi):
        y_hi = 1.0
    elif js == 0 or (js == 1 and ux0 + params.eps_sell * row[0] <= _ENDPOINT_TOL):
        y_hi = 0.0
    elif js == 1 or js == n:
        y_hi = float(grid.x[js])
    else:
        y_hi = _refine(row, grid, params, js - 1, "sell")

    if y_lo > y_hi:
        if y_lo - y_hi > 1e-8:
            raise ConcavityError(
                f"extracted boundaries cross: y_lo={y_lo!r} > y_hi={y_hi!r}"
            )
        y_lo = y_hi = 0.5 * (y_lo + y_hi)
    return y_lo, y_hi


def foc_residual(
    row: np.ndarray, grid: SpatialGrid, params: ModelParams, y: float, side: str
) -> float:
    """First-order-condition residual at a reported interior boundary.

    Evaluated in the same local quadratic slice model the refinement uses
    (so it measures how well the bisection solved its equation, in units of
    the value scale).
    """
    g1 = 1.0 - params.gamma
    pw = (1.0 + params.eps_buy * grid.x) ** (-g1) if side == "buy" else (
        1.0 - params.eps_sell * grid.x
    ) ** (-g1)
    f = (row / g1) * pw
    q = int(np.argmax(f)) - 1
    q = min(max(q, 1), grid.n_z - 2)
    model = _quad_model(row, grid, q)
    psi = _foc_sign(float(np.log(y / (1.0 - y))), model, grid, params, side)
    # psi ~ v_x*(1+eps*y)/(1-gamma) - eps*v: already in value units
    return abs(psi)


@dataclass(frozen=True, eq=False)
class NoTradeRegion:
    """Band edges per time level, plus the pinning threshold times.

    times decreases from T to 0 (same levels as the generating surface);
    lower[k] = y_lo(times[k]), upper[k] = y_hi(times[k]).
    t_lower: earliest grid time from which y_lo == 0 up to T.
    t_upper: earliest grid time from which y_hi == 1 up to T.
    """

    times: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    t_lower: float
    t_upper: float

    def at(self, t: float) -> tuple[float, float]:
        """Band at time t, linear interpolation between levels."""
        T = self.times[0]
        dt = self.times[0] - self.times[1]
        pos = (T - t) / dt
        k = int(min(max(math.floor(pos), 0), len(self.times) - 2))
        w = pos - k
        lo = (1.0 - w) * self.lower[k] + w * self.lower[k + 1]
        hi = (1.0 - w) * self.upper[k] + w * self.upper[k + 1]
        return float(lo), float(hi)


def extract_region(surface: ValueSurface) -> NoTradeRegion:
    """Extract the band at every time level of a surface."""
    p, grid = surface.params, surface.grid
    g1m = p.gamma - 1.0
    powers = ((1.0 + p.eps_buy * grid.x) ** g1m, (1.0 - p.eps_sell * grid.x) ** g1m)
    n = len(surface.times)
    lower = np.empty(n)
    upper = np.empty(n)
    for k in range(n):
        lower[k], upper[k] = extract_boundaries(surface.values[k], grid, p, powers)
    t_lo, t_hi = _pinning_times(surface.times, lower, upper)
    return NoTradeRegion(
        times=surface.times.copy(), lower=lower, upper=upper, t_lower=t_lo, t_upper=t_hi
    )


def _pinning_times(times: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> tuple[float, float]:
    """Earliest grid times from which the boundaries stay pinned to T."""
    t_lo = times[-1]
    for k in range(len(times)):
        if lower[k] != 0.0:
            t_lo = times[k - 1] if k > 0 else times[0]
            break
    else:
        t_lo = times[-1]
    t_hi = times[-1]
    for k in range(len(times)):
        if upper[k] != 1.0:
            t_hi = times[k - 1] if k > 0 else times[0]
            break
    else:
        t_hi = times[-1]
    return float(t_lo), float(t_hi)


def threshold_times(surface: ValueSurface, region: NoTradeRegion) -> tuple[float, float]:
    """Threshold times (t_lo, t_hi) after which the band fills [0, 1].

    Returns the direct grid-scan estimates stored on the region; also
    computes the integral-equation estimates and logs both at INFO level.
    """
    t_ie = threshold_times_integral(surface, region)
    log.info(
        "threshold times: direct=(%.6g, %.6g) integral-equation=(%.6g, %.6g)",
        region.t_lower, region.t_upper, t_ie[0], t_ie[1],
    )
    return region.t_lower, region.t_upper


def threshold_times_integral(surface: ValueSurface, region: NoTradeRegion) -> tuple[float, float]:
    """Threshold times from the scalar integral equations in the boundaries.

    Lower boundary: t_lo solves

      eps_buy e^{mu T} = mu (1+eps_buy) int_a^T e^{(mu+lam) s} P(s) ds,
      P(s) = e^{-lam T} + lam int_s^T e^{-lam u} v(u, y_lo(u)) (1+eps_buy y_lo(u))^{gamma-1} du.

    Upper boundary: with beta = lam - (1-gamma) mu + gamma (1-gamma) sigma^2/2
    and rho = gamma mu - gamma (1+gamma) sigma^2 / 2, t_hi solves

      eps_sell = (gamma sigma^2 - mu) int_a^T e^{rho (T-s)} J(s) ds,
      J(s) = e^{-beta (T-s)} + lam int_s^T e^{-beta (u-s)}
                 v(u, y_hi(u)) ((1-eps_sell)/(1-eps_sell y_hi(u)))^{1-gamma} du.

    Both nested integrals use the trapezoid rule on the surface's native time
    grid, written as backward recursions in the exponentially weighted
    integrands so that no factor e^{lam t} is ever formed alone (stable for
    any lam).  If an equation has no root in [0, T] the threshold is 0.
    """
    p = surface.params
    mu, lam, g, sig = p.mu, p.lam, p.gamma, p.sigma
    T = p.T
    times_desc = surface.times
    n = len(times_desc) - 1
    dt = surface.dt
    s_asc = times_desc[::-1]

    # boundary-curve integrands on ascending time levels
    g_lo = np.empty(n + 1)
    g_hi = np.empty(n + 1)
    for k in range(n + 1):
        row = surface.values[n - k]
        y1 = region.lower[n - k]
        y2 = region.upper[n - k]
        g_lo[k] = _interp_row_quad(row, surface.grid, y1) * (1.0 + p.eps_buy * y1) ** (g - 1.0)
        g_hi[k] = _interp_row_quad(row, surface.grid, y2) * (
            (1.0 - p.eps_sell) / (1.0 - p.eps_sell * y2)
        ) ** (1.0 - g)

    # lower threshold -------------------------------------------------------
    t_lo = 0.0
    if mu > 0.0:
        itilde = np.empty(n + 1)  # e^{lam s} P(s)
        itilde[n] = 1.0
        w = math.exp(-lam * dt)
        for k in range(n - 1, -1, -1):
            itilde[k] = w * itilde[k + 1] + lam * dt * 0.5 * (g_lo[k] + w * g_lo[k + 1])
        outer = np.exp(mu * s_asc) * itilde
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (outer[1:] + outer[:-1]) * dt)])
        F = mu * (1.0 + p.eps_buy) * (cum[-1] - cum) - p.eps_buy * math.exp(mu * T)
        t_lo = _root_from_levels(s_asc, F)

    # upper threshold -------------------------------------------------------
    beta = lam - (1.0 - g) * mu + g * (1.0 - g) * sig**2 / 2.0
    rho = g * mu - g * (1.0 + g) * sig**2 / 2.0
    t_hi = 0.0
    if g * sig**2 - mu > 0.0:
        jarr = np.empty(n + 1)
        jarr[n] = 1.0
        wb = math.exp(-beta * dt)
        for k in range(n - 1, -1, -1):
            jarr[k] = wb * jarr[k + 1] + lam * dt * 0.5 * (g_hi[k] + wb * g_hi[k + 1])
        outer = np.exp(rho * (T - s_asc)) * jarr
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (outer[1:] + outer[:-1]) * dt)])
        G = (g * sig**2 - mu) * (cum[-1] - cum) - p.eps_sell
        t_hi = _root_from_levels(s_asc, G)

    return t_lo, t_hi


def _root_from_levels(s_asc: np.ndarray, F: np.ndarray) -> float:
    """Root of a decreasing level function given on grid times.

    F decreases in s with F(T) < 0; returns the linearly interpolated root,
    or 0.0 when F < 0 everywhere (no root).
    """
    if F[0] < 0.0:
        return 0.0
    idx = np.where(F < 0.0)[0]
    if idx.size == 0:
        return float(s_asc[-1])
    k = int(idx[0])
    f0, f1 = F[k - 1], F[k]
    return float(s_asc[k - 1] + (s_asc[k] - s_asc[k - 1]) * f0 / (f0 - f1))


def write_region_csv(
    region: NoTradeRegion, path: str, extra_header: list[str] | None = None
) -> None:
    """Write the band as CSV: columns t, y_lower, y_upper."""
    with open(path, "w") as f:
        f.write("# schema=illiq.region.v1\n")
        f.write(f"# t_lower={region.t_lower!r} t_upper={region.t_upper!r}\n")
        for line in extra_header or []:
            f.write(f"# {line}\n")
        f.write("t,y_lower,y_upper\n")
        block = np.column_stack([region.times, region.lower, region.upper])
        np.savetxt(f, block, fmt="%.17g", delimiter=",")
