"""Backward solver for the reduced value function v(t, x).

v solves, backward from v(T, .) = 1,

    0 = v_t + x(1-x)(mu - gamma sigma^2 x) v_x + sigma^2 x^2 (1-x)^2 v_xx / 2
        + (Q(x) - lam) v + lam * L(t, x),

where L is the value of the best rebalancing available at a trading time:

    L(t, x) = sup_y v(t, y) * ((1+eps_buy*x)/(1+eps_buy*y))^{1-gamma}   (y >= x)
                      resp. * ((1-eps_sell*x)/(1-eps_sell*y))^{1-gamma} (y < x).

The sup is attained by clamping x into the no-trade band [y_lo(t), y_hi(t)],
which gives the three-branch closed form implemented by :func:`compute_L`.

Discretisation: logit coordinates z = log(x/(1-x)), where the operator becomes
(sigma^2/2) v_zz + (mu - sigma^2/2 + (1-gamma) sigma^2 x) v_z with constant
diffusion; uniform grid in z plus two synthetic nodes for x = 0 and x = 1,
which carry the spatial-term-free boundary equations.  Time stepping is
backward Euler with the local terms (diffusion, advection, Q) implicit and
the *defect* lam*(L - v) of the nonlocal term taken from the previous (later)
slice.  The defect vanishes identically inside the no-trade band and is
bounded outside, so the step error carries no factor of lam; the grouping
"-lam*v implicit, +lam*L explicit" would.  Stability needs dt*lam <= 1; the
step count enforces dt <= 0.1/lam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import expit, logit

from .errors import NumericalError, ValidationError
from .model import ModelParams, merton_fraction, q_of, value_bounds

__all__ = [
    "SpatialGrid",
    "ValueSurface",
    "make_grid",
    "solve",
    "compute_L",
    "compute_Lx",
    "read_surface_csv",
]

SURFACE_SCHEMA = "illiq.surface.v1"


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Uniform grid in z = logit(x) plus synthetic endpoint nodes.

    Attributes
    ----------
    z_min, z_max : float
        Range of the interior logit nodes.
    n_z : int
        Number of interior nodes (>= 3).
    z : ndarray, shape (n_z,)
        Interior logit nodes, uniform.
    x : ndarray, shape (n_z + 2,)
        All stock fractions: x[0] = 0, x[1:-1] = expit(z), x[-1] = 1,
        strictly increasing.
    dz : float
        Node spacing.
    """

    z_min: float
    z_max: float
    n_z: int
    z: np.ndarray
    x: np.ndarray
    dz: float


def make_grid(z_min: float = -12.0, z_max: float = 12.0, n_z: int = 4000) -> SpatialGrid:
    """Build a :class:`SpatialGrid`; defaults resolve x in [6e-6, 1 - 6e-6]."""
    if not (z_min < z_max):
        raise ValidationError(f"need z_min < z_max, got {z_min}, {z_max}")
    if n_z < 3:
        raise ValidationError(f"n_z must be >= 3, got {n_z}")
    z = np.linspace(z_min, z_max, n_z)
    x = np.empty(n_z + 2)
    x[0], x[-1] = 0.0, 1.0
    x[1:-1] = expit(z)
    if not np.all(np.diff(x) > 0):
        raise ValidationError("grid fractions are not strictly increasing")
    return SpatialGrid(z_min=z_min, z_max=z_max, n_z=n_z, z=z, x=x, dz=float(z[1] - z[0]))


# ---------------------------------------------------------------------------
# Slice interpolation helpers (one row = one time level, length n_z + 2)
# ---------------------------------------------------------------------------


def _interp_row(row: np.ndarray, grid: SpatialGrid, xs) -> np.ndarray:
    """Piecewise-linear interpolation of a slice: linear in z between interior
    nodes, linear in x between an endpoint and its nearest interior node."""
    xs = np.asarray(xs, dtype=float)
    scalar = xs.ndim == 0
    xq = np.atleast_1d(xs)
    out = np.empty_like(xq)

    x1, x_last = grid.x[1], grid.x[-2]
    lo = xq <= x1
    hi = xq >= x_last
    mid = ~(lo | hi)

    out[lo] = row[0] + (row[1] - row[0]) * (xq[lo] / x1)
    out[hi] = row[-1] + (row[-2] - row[-1]) * ((1.0 - xq[hi]) / (1.0 - x_last))
    if np.any(mid):
        zq = logit(xq[mid])
        pos = (zq - grid.z_min) / grid.dz
        j = np.clip(pos.astype(int), 0, grid.n_z - 2)
        w = pos - j
        out[mid] = (1.0 - w) * row[1 + j] + w * row[2 + j]
    return out[0] if scalar else out


def _interp_row_quad(row: np.ndarray, grid: SpatialGrid, y: float) -> float:
    """Local quadratic (in z) interpolation of a slice at a single point.

    Used for the peak values v(t, y_lo), v(t, y_hi) entering L, where the
    O(dz^3) accuracy keeps the defect error well below the step error.
    Falls back to linear near the synthetic endpoint nodes.
    """
    if y <= grid.x[1] or y >= grid.x[-2]:
        return float(_interp_row(row, grid, y))
    zq = float(logit(y))
    q = int(round((zq - grid.z_min) / grid.dz))
    q = min(max(q, 1), grid.n_z - 2)
    f = q + 1  # full index of the centre node
    s = (zq - grid.z[q]) / grid.dz  # in [-1, 1]
    vm, v0, vp = row[f - 1], row[f], row[f + 1]
    return float(v0 + 0.5 * s * (vp - vm) + 0.5 * s * s * (vp - 2.0 * v0 + vm))


def _row_deriv_x(row: np.ndarray, grid: SpatialGrid, xs) -> np.ndarray:
    """v_x from centred differences in z, interpolated linearly in z.

    Queries outside the inner node range are clamped to it; the one-sided
    limits at x = 0, 1 are exposed separately on :class:`ValueSurface`.
    """
    xs = np.asarray(xs, dtype=float)
    scalar = xs.ndim == 0
    xq = np.atleast_1d(xs)
    # nodal v_z on interior z-nodes q = 1 .. n_z-2 (full index 2 .. n_z-1)
    vz = (row[3 : grid.n_z + 1] - row[1 : grid.n_z - 1]) / (2.0 * grid.dz)
    xin = grid.x[2 : grid.n_z]
    vx_nodal = vz / (xin * (1.0 - xin))

    zq = logit(np.clip(xq, grid.x[2], grid.x[-3]))
    pos = (zq - grid.z[1]) / grid.dz
    j = np.clip(pos.astype(int), 0, grid.n_z - 4)
    w = pos - j
    out = (1.0 - w) * vx_nodal[j] + w * vx_nodal[j + 1]
    return out[0] if scalar else out


def _row_deriv_xx(row: np.ndarray, grid: SpatialGrid, xs) -> np.ndarray:
    """v_xx from centred differences in z, interpolated linearly in z."""
    xs = np.asarray(xs, dtype=float)
    scalar = xs.ndim == 0
    xq = np.atleast_1d(xs)
    vz = (row[3 : grid.n_z + 1] - row[1 : grid.n_z - 1]) / (2.0 * grid.dz)
    vzz = (row[3 : grid.n_z + 1] - 2.0 * row[2 : grid.n_z] + row[1 : grid.n_z - 1]) / grid.dz**2
    xin = grid.x[2 : grid.n_z]
    vxx_nodal = (vzz - (1.0 - 2.0 * xin) * vz) / (xin * (1.0 - xin)) ** 2

    zq = logit(np.clip(xq, grid.x[2], grid.x[-3]))
    pos = (zq - grid.z[1]) / grid.dz
    j = np.clip(pos.astype(int), 0, grid.n_z - 4)
    w = pos - j
    out = (1.0 - w) * vxx_nodal[j] + w * vxx_nodal[j + 1]
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# Value surface
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ValueSurface:
    """Reduced value v on a time/space grid.

    Attributes
    ----------
    params : ModelParams
    grid : SpatialGrid
    times : ndarray, shape (n_t + 1,)
        Uniform, decreasing from T to 0; times[0] = T.
    values : ndarray, shape (n_t + 1, n_z + 2)
        values[k, i] = v(times[k], grid.x[i]); values[0] == 1 exactly.
    """

    params: ModelParams
    grid: SpatialGrid
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.times.ndim != 1 or self.values.shape != (len(self.times), len(self.grid.x)):
            raise ValidationError("surface arrays have inconsistent shapes")
        if not np.all(np.diff(self.times) < 0):
            raise ValidationError("times must decrease from T to 0")
        if not np.all(self.values[0] == 1.0):
            raise ValidationError("terminal slice must be exactly 1")

    @property
    def dt(self) -> float:
        return float(self.times[0] - self.times[1])

    def _blend(self, t: float) -> np.ndarray:
        """Row of values at time t, linear in t between bracketing levels."""
        T = self.params.T
        if not (0.0 <= t <= T):
            raise ValidationError(f"t must lie in [0, T], got {t}")
        pos = (T - t) / self.dt
        k = int(min(max(math.floor(pos), 0), len(self.times) - 2))
        w = pos - k
        if w == 0.0:
            return self.values[k]
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]

    def value_at(self, t: float, x) -> float | np.ndarray:
        """v(t, x); x may be a scalar or an array in [0, 1]."""
        return _interp_row(self._blend(t), self.grid, x)

    def deriv_x_at(self, t: float, x) -> float | np.ndarray:
        """v_x(t, x) for x in the interior (clamped to the inner node range)."""
        return _row_deriv_x(self._blend(t), self.grid, x)

    def deriv_xx_at(self, t: float, x) -> float | np.ndarray:
        """v_xx(t, x) for x in the interior (clamped to the inner node range)."""
        return _row_deriv_xx(self._blend(t), self.grid, x)

    def deriv_x_edge(self, t: float, side: int) -> float:
        """One-sided v_x limit at x = 0 (side=0) or x = 1 (side=1)."""
        row = self._blend(t)
        if side == 0:
            return float((row[1] - row[0]) / self.grid.x[1])
        return float((row[-1] - row[-2]) / (1.0 - self.grid.x[-2]))

    # -- serialization ------------------------------------------------------

    def to_csv(self, path: str, extra_header: list[str] | None = None) -> None:
        """Write the surface as CSV with a '#' comment header.

        Columns, in order: t, x, v -- one row per (time level, node),
        17 significant digits.
        """
        p = self.params
        with open(path, "w") as f:
            f.write(f"# schema={SURFACE_SCHEMA}\n")
            f.write(
                "# params: "
                f"mu={p.mu!r} sigma={p.sigma!r} gamma={p.gamma!r} T={p.T!r} "
                f"eps_buy={p.eps_buy!r} eps_sell={p.eps_sell!r} lambda={p.lam!r}\n"
            )
            f.write(
                f"# grid: z_min={self.grid.z_min!r} z_max={self.grid.z_max!r} "
                f"n_z={self.grid.n_z} n_t={len(self.times) - 1}\n"
            )
            for line in extra_header or []:
                f.write(f"# {line}\n")
            f.write("t,x,v\n")
            for k, t in enumerate(self.times):
                block = np.column_stack(
                    [np.full_like(self.grid.x, t), self.grid.x, self.values[k]]
                )
                np.savetxt(f, block, fmt="%.17g", delimiter=",")


def read_surface_csv(path: str) -> ValueSurface:
    """Read a surface written by :meth:`ValueSurface.to_csv`."""
    meta: dict[str, float] = {}
    with open(path) as f:
        for line in f:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("params:") or body.startswith("grid:"):
                for tok in body.split(":", 1)[1].split():
                    key, val = tok.split("=")
                    meta[key] = float(val)
    params = ModelParams(
        mu=meta["mu"], sigma=meta["sigma"], gamma=meta["gamma"], T=meta["T"],
        eps_buy=meta["eps_buy"], eps_sell=meta["eps_sell"], lam=meta["lambda"],
    )
    grid = make_grid(meta["z_min"], meta["z_max"], int(meta["n_z"]))
    # skip the comment header plus the "t,x,v" column-name row
    with open(path) as f:
        skip = 0
        for line in f:
            skip += 1
            if not line.startswith("#"):
                break
    data = np.loadtxt(path, delimiter=",", skiprows=skip)
    n_t = int(meta["n_t"])
    n_nodes = grid.n_z + 2
    values = data[:, 2].reshape(n_t + 1, n_nodes)
    times = data[:: n_nodes, 0][: n_t + 1].copy()
    return ValueSurface(params=params, grid=grid, times=times, values=values)


# ---------------------------------------------------------------------------
# The rebalancing value L and its x-derivative
# ---------------------------------------------------------------------------


def compute_L(
    row: np.ndarray,
    grid: SpatialGrid,
    params: ModelParams,
    region: tuple[float, float],
    x=None,
    powers: tuple[np.ndarray, np.ndarray] | None = None,
):
    """Best rebalancing value L for one time slice.

    Parameters
    ----------
    row : slice of v at one time level (length n_z + 2).
    region : (y_lo, y_hi) no-trade band of that slice.
    x : query fractions; None means "all grid nodes" (fast path used by the
        solver, where the middle branch is the row itself).
    powers : optional precomputed ((1+eps_buy*x)^(1-gamma),
        (1-eps_sell*x)^(1-gamma)) on the grid nodes, to avoid re-evaluating
        powers in the hot loop.

    Returns the slice of L at x (scalar in, scalar out).
    """
    y_lo, y_hi = region
    g1 = 1.0 - params.gamma
    if x is None:
        x_arr = grid.x
        v_mid = row
    else:
        x_arr = np.asarray(x, dtype=float)
        v_mid = _interp_row(row, grid, x_arr)
    if powers is None:
        pow_b = (1.0 + params.eps_buy * x_arr) ** g1
        pow_s = (1.0 - params.eps_sell * x_arr) ** g1
    else:
        pow_b, pow_s = powers

    v_lo = _interp_row_quad(row, grid, y_lo)
    v_hi = _interp_row_quad(row, grid, y_hi)
    coef_b = v_lo / (1.0 + params.eps_buy * y_lo) ** g1
    coef_s = v_hi / (1.0 - params.eps_sell * y_hi) ** g1

    out = np.where(x_arr < y_lo, coef_b * pow_b, np.where(x_arr > y_hi, coef_s * pow_s, v_mid))
    return float(out) if out.ndim == 0 else out


def compute_Lx(
    row: np.ndarray,
    grid: SpatialGrid,
    params: ModelParams,
    region: tuple[float, float],
    x,
):
    """x-derivative of L for one time slice.

    Outside the band the derivative comes from the closed-form branches:

        x < y_lo:  +eps_buy  (1-gamma) v(y_lo) / (1+eps_buy*x)
                       * ((1+eps_buy*x)/(1+eps_buy*y_lo))^{1-gamma}
        x > y_hi:  -eps_sell (1-gamma) v(y_hi) / (1-eps_sell*x)
                       * ((1-eps_sell*x)/(1-eps_sell*y_hi))^{1-gamma}

    and inside it equals v_x.  The first-order conditions at y_lo, y_hi make
    the three branches match continuously.
    """
    y_lo, y_hi = region
    g1 = 1.0 - params.gamma
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    xq = np.atleast_1d(x_arr)

    v_lo = _interp_row_quad(row, grid, y_lo)
    v_hi = _interp_row_quad(row, grid, y_hi)
    ratio_b = ((1.0 + params.eps_buy * xq) / (1.0 + params.eps_buy * y_lo)) ** g1
    ratio_s = ((1.0 - params.eps_sell * xq) / (1.0 - params.eps_sell * y_hi)) ** g1
    low = params.eps_buy * g1 * v_lo / (1.0 + params.eps_buy * xq) * ratio_b
    high = -params.eps_sell * g1 * v_hi / (1.0 - params.eps_sell * xq) * ratio_s
    mid = _row_deriv_x(row, grid, xq)

    out = np.where(xq < y_lo, low, np.where(xq > y_hi, high, mid))
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------


def solve(params: ModelParams, grid: SpatialGrid | None = None, n_t: int | None = None) -> ValueSurface:
    """Solve backward from the horizon and return the value surface.

    Each step, working on the already-computed (later-time) slice: extract the
    no-trade band, form L, then advance one implicit step in the local terms
    with the bounded defect lam*(L - v) on the right-hand side.  The two
    synthetic endpoint nodes follow their spatial-term-free equations first;
    the interior system closes with ghost values interpolated linearly in x
    between each endpoint node and its nearest interior node.

    n_t defaults to max(1000, ceil(10*lam*T)) and is raised if needed so that
    dt <= 0.1/lam.
    """
    from .no_trade import extract_boundaries  # deferred: avoids module cycle

    if grid is None:
        grid = make_grid()
    if abs(params.gamma - 1.0) < 1e-3:
        raise ValidationError(
            f"gamma within 1e-3 of 1 is numerically degenerate, got {params.gamma}"
        )
    y_m = merton_fraction(params)
    if not (0.0 < y_m < 1.0):
        raise ValidationError(f"Merton fraction must lie in (0, 1), got {y_m}")
    if not (grid.z_min < logit(y_m) < grid.z_max):
        raise ValidationError("grid does not bracket logit of the Merton fraction")

    T, lam = params.T, params.lam
    if n_t is None:
        n_t = max(1000, math.ceil(10.0 * lam * T))
    else:
        n_t = max(int(n_t), math.ceil(10.0 * lam * T))
    dt = T / n_t
    times = T - dt * np.arange(n_t + 1)
    times[-1] = 0.0

    x_int = grid.x[1:-1]
    dz = grid.dz
    diff = 0.5 * params.sigma**2
    adv = params.mu - 0.5 * params.sigma**2 + (1.0 - params.gamma) * params.sigma**2 * x_int
    q_int = np.asarray(q_of(params, x_int))
    q0 = 0.0
    q1 = float(q_of(params, 1.0))

    alpha_l = diff / dz**2 - adv / (2.0 * dz)
    alpha_r = diff / dz**2 + adv / (2.0 * dz)
    # Ghost nodes at z_min - dz and z_max + dz are exponentially close in x to
    # the first/last interior node, so represent them by linear-in-x
    # interpolation between the endpoint node and that interior node.  The
    # interior-node share goes to the diagonal; the endpoint share stays on
    # the right-hand side with the (already advanced) endpoint value.
    x_ghost_lo = float(expit(grid.z_min - dz))
    x_ghost_hi = float(expit(grid.z_max + dz))
    phi_lo = x_ghost_lo / x_int[0]                         # weight of v[1]
    phi_hi = (1.0 - x_ghost_hi) / (1.0 - x_int[-1])        # weight of v[n_z]
    ab = np.zeros((3, grid.n_z))
    ab[0, 1:] = -alpha_r[:-1]
    ab[1, :] = 1.0 / dt + 2.0 * diff / dz**2 - q_int
    ab[1, 0] -= alpha_l[0] * phi_lo
    ab[1, -1] -= alpha_r[-1] * phi_hi
    ab[2, :-1] = -alpha_l[1:]

    g1 = 1.0 - params.gamma
    pow_b = (1.0 + params.eps_buy * grid.x) ** g1
    pow_s = (1.0 - params.eps_sell * grid.x) ** g1
    powers = (pow_b, pow_s)
    powers_extract = (1.0 / pow_b, 1.0 / pow_s)

    v_lo_bound, v_hi_bound = value_bounds(params)
    slack_lo = v_lo_bound - 1e-6 * max(1.0, abs(v_lo_bound))
    slack_hi = v_hi_bound + 1e-6 * max(1.0, abs(v_hi_bound))

    values = np.empty((n_t + 1, grid.n_z + 2))
    values[0] = 1.0

    for k in range(n_t):
        cur = values[k]
        region = extract_boundaries(cur, grid, params, powers_extract)
        L = compute_L(cur, grid, params, region, x=None, powers=powers)
        defect = lam * (L - cur)

        new0 = (cur[0] + dt * defect[0]) / (1.0 - dt * q0)
        new1 = (cur[-1] + dt * defect[-1]) / (1.0 - dt * q1)

        rhs = cur[1:-1] / dt + defect[1:-1]
        rhs[0] += alpha_l[0] * (1.0 - phi_lo) * new0
        rhs[-1] += alpha_r[-1] * (1.0 - phi_hi) * new1

        nxt = values[k + 1]
        nxt[0] = new0
        nxt[-1] = new1
        nxt[1:-1] = solve_banded((1, 1), ab, rhs)

        if not np.all(np.isfinite(nxt)):
            raise NumericalError(f"non-finite value at t={times[k + 1]:.6g}")
        mn, mx = nxt.min(), nxt.max()
        if mn < slack_lo or mx > slack_hi:
            raise NumericalError(
                f"value bounds violated at t={times[k + 1]:.6g}: "
                f"[{mn:.6g}, {mx:.6g}] outside [{v_lo_bound:.6g}, {v_hi_bound:.6g}]"
            )

    return ValueSurface(params=params, grid=grid, times=times, values=values)
