"""Trading policies and Monte Carlo evaluation under Poisson trading dates.

Between trading opportunities the portfolio is frozen: the stock account
follows geometric Brownian motion and the cash account is constant, so the
risky fraction drifts.  Opportunities arrive at the jump times of a Poisson
process with intensity ``lam``; at each arrival before the horizon the policy
picks a new target fraction and the trade is charged proportional costs
(``eps_buy`` per unit bought, ``eps_sell`` per unit sold, both on the traded
amount).  Terminal wealth is scored with power utility.

Paths are simulated exactly: exponential waiting times and lognormal growth
over each waiting interval, with the final interval truncated at the horizon.
All randomness comes from the counter-based generator in :mod:`illiq.rng`
keyed by (seed, path, draw), so different policies evaluated under the same
seed see identical price paths and arrival times (common random numbers).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ValidationError
from .model import ModelParams, PortfolioState, merton_fraction, utility
from .no_trade import NoTradeRegion
from .rng import uniforms

__all__ = [
    "Policy",
    "PolicyEvalResult",
    "target_fraction",
    "trade_amount",
    "simulate",
]

_KINDS = ("optimal-band", "fixed-target", "no-trade")


@dataclass(frozen=True)
class Policy:
    """A rule mapping (time, current fraction) to a target fraction.

    kind
        ``"optimal-band"``: relocate to the nearest edge of a no-trade
        region when outside it, hold inside (requires ``region``).
        ``"fixed-target"``: always rebalance to ``target``.
        ``"no-trade"``: never trade.
    """

    kind: str
    region: NoTradeRegion | None = None
    target: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown policy kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "optimal-band" and self.region is None:
            raise ValidationError("optimal-band policy requires a no-trade region")
        if self.kind == "fixed-target":
            if self.target is None:
                raise ValidationError("fixed-target policy requires a target fraction")
            if not 0.0 <= self.target <= 1.0:
                raise ValidationError(f"target fraction must lie in [0, 1], got {self.target}")

    @classmethod
    def band(cls, region: NoTradeRegion) -> "Policy":
        return cls(kind="optimal-band", region=region)

    @classmethod
    def fixed(cls, target: float) -> "Policy":
        return cls(kind="fixed-target", target=target)

    @classmethod
    def hold(cls) -> "Policy":
        return cls(kind="no-trade")


@dataclass(frozen=True)
class PolicyEvalResult:
    """Monte Carlo summary for one policy evaluation."""

    mean_utility: float
    std_error: float
    n_paths: int
    terminal_wealth_moments: tuple[float, float]
    seed: int


def _region_index(region: NoTradeRegion, t) -> np.ndarray:
    """Index of the nearest region level at or before time t.

    Levels are stored at uniformly spaced times descending from the horizon.
    The level used for a trade at time t is the one with the largest level
    time not exceeding t, so the policy never peeks at later information.
    """
    t_top = region.times[0]
    dt = region.times[0] - region.times[1]
    pos = (t_top - np.asarray(t, dtype=np.float64)) / dt
    idx = np.ceil(pos - 1e-9).astype(np.int64)
    return np.clip(idx, 0, len(region.times) - 1)


def target_fraction(policy: Policy, t: float, x: float) -> float:
    """Target risky fraction chosen by the policy at time t, fraction x."""
    if policy.kind == "no-trade":
        return float(x)
    if policy.kind == "fixed-target":
        return float(policy.target)
    k = int(_region_index(policy.region, t))
    lo = policy.region.lower[k]
    hi = policy.region.upper[k]
    return float(min(max(x, lo), hi))


def trade_amount(state: PortfolioState, y: float, params: ModelParams) -> float:
    """Cash value m moved into stock so the post-trade fraction equals y.

    Buying m > 0 costs ``eps_buy * m`` in fees, selling charges
    ``eps_sell * |m|``; fees are paid from the cash account.  Solving
    (x*w + m) / (w - eps*|m|) = y gives the closed forms below.
    """
    if not 0.0 <= y <= 1.0:
        raise ValidationError(f"target fraction must lie in [0, 1], got {y}")
    w, x = state.w, state.x
    if y >= x:
        return w * (y - x) / (1.0 + params.eps_buy * y)
    return w * (y - x) / (1.0 - params.eps_sell * y)


def _targets(policy: Policy, t: np.ndarray, x: np.ndarray, p: ModelParams) -> np.ndarray:
    if policy.kind == "no-trade":
        return x
    if policy.kind == "fixed-target":
        return np.full_like(x, policy.target)
    idx = _region_index(policy.region, t)
    return np.clip(x, policy.region.lower[idx], policy.region.upper[idx])


def simulate(
    params: ModelParams,
    policy: Policy,
    x0: float,
    w0: float,
    n_paths: int,
    seed: int,
    keep_paths: bool = False,
):
    """Evaluate a policy by exact event-driven Monte Carlo.

    Returns a :class:`PolicyEvalResult`; with ``keep_paths=True`` also
    returns a dict of per-path arrays (terminal wealth, utility, trade
    counts).  Identical (seed, n_paths) pairs reproduce results bit for bit.
    """
    if not 0.0 <= x0 <= 1.0:
        raise ValidationError(f"initial fraction must lie in [0, 1], got {x0}")
    if not w0 > 0.0:
        raise ValidationError(f"initial wealth must be positive, got {w0}")
    if not (isinstance(n_paths, (int, np.integer)) and n_paths >= 2):
        raise ValidationError(f"n_paths must be an integer >= 2, got {n_paths!r}")

    mu, sig, lam, T = params.mu, params.sigma, params.lam, params.T
    drift = mu - 0.5 * sig * sig

    idx = np.arange(n_paths, dtype=np.uint64)
    t = np.zeros(n_paths)
    cash = np.full(n_paths, w0 * (1.0 - x0))
    stock = np.full(n_paths, w0 * x0)
    n_trades = np.zeros(n_paths, dtype=np.int64)
    active = np.ones(n_paths, dtype=bool)

    j = 0
    while active.any():
        gap = -np.log(uniforms(seed, idx, 2 * j)) / lam
        z = ndtri(uniforms(seed, idx, 2 * j + 1))
        step = np.minimum(gap, T - t)
        growth = np.exp(drift * step + sig * np.sqrt(step) * z)
        stock = np.where(active, stock * growth, stock)
        t = np.where(active, t + step, t)
        arrive = active & (t < T)

        if arrive.any():
            w = cash + stock
            x = stock / w
            y = _targets(policy, t, x, params)
            m = np.where(
                y >= x,
                w * (y - x) / (1.0 + params.eps_buy * y),
                w * (y - x) / (1.0 - params.eps_sell * y),
            )
            m = np.where(arrive, m, 0.0)
            fee = params.eps_buy * np.maximum(m, 0.0) + params.eps_sell * np.maximum(-m, 0.0)
            stock = stock + m
            cash = cash - m - fee
            n_trades += (arrive & (m != 0.0)).astype(np.int64)
        active = arrive
        j += 1

    wealth = cash + stock
    util = utility(wealth, params.gamma)
    mean = float(np.mean(util))
    sderr = float(np.std(util, ddof=1) / np.sqrt(n_paths))
    result = PolicyEvalResult(
        mean_utility=mean,
        std_error=sderr,
        n_paths=int(n_paths),
        terminal_wealth_moments=(float(np.mean(wealth)), float(np.var(wealth, ddof=1))),
        seed=int(seed),
    )
    if keep_paths:
        return result, {"wealth": wealth, "utility": util, "n_trades": n_trades}
    return result


def default_initial_fraction(params: ModelParams) -> float:
    """Merton fraction clipped into [0, 1], the natural starting point."""
    return float(min(max(merton_fraction(params), 0.0), 1.0))
