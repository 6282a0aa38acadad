"""Market model and parameter containers.

An investor with power utility (relative risk aversion ``gamma``) trades a
riskless bond (zero rate) and a stock following a geometric Brownian motion
with drift ``mu`` and volatility ``sigma``.  Trades are only possible at the
jump times of a Poisson clock with intensity ``lam`` and incur proportional
costs ``eps_buy`` (on purchases) and ``eps_sell`` (on sales).  The state is
the fraction ``x`` of wealth held in stock; the frictionless (Merton) target
fraction is ``mu / (gamma * sigma**2)``.

Values are quoted through the reduced function v with
``V(t, w, x) = w**(1-gamma) / (1-gamma) * v(t, x)``; v is dimensionless and
equals 1 at the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "ModelParams",
    "PortfolioState",
    "merton_fraction",
    "q_of",
    "q_sup_norm",
    "merton_value",
    "value_bounds",
    "rebalance_bounds",
    "utility",
]


@dataclass(frozen=True)
class ModelParams:
    """Market and preference parameters.

    Attributes
    ----------
    mu, sigma : float
        Stock drift and volatility (sigma > 0).
    gamma : float
        Relative risk aversion (gamma > 0, gamma != 1).
    T : float
        Horizon (T > 0).
    eps_buy, eps_sell : float
        Proportional cost per unit of stock bought / sold.
        eps_sell must lie in [0, 1); eps_buy in [0, 10].
    lam : float
        Intensity of the Poisson clock of trading opportunities (lam > 0).
    """

    mu: float
    sigma: float
    gamma: float
    T: float
    eps_buy: float
    eps_sell: float
    lam: float

    def __post_init__(self) -> None:
        if not (self.sigma > 0.0):
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if not (self.T > 0.0):
            raise ValidationError(f"T must be positive, got {self.T}")
        if not (self.lam > 0.0):
            raise ValidationError(f"lam must be positive, got {self.lam}")
        if not (self.gamma > 0.0) or self.gamma == 1.0:
            raise ValidationError(
                f"gamma must be positive and != 1, got {self.gamma}"
            )
        if not (0.0 <= self.eps_sell < 1.0):
            raise ValidationError(
                f"eps_sell must lie in [0, 1), got {self.eps_sell}"
            )
        if not (0.0 <= self.eps_buy <= 10.0):
            raise ValidationError(
                f"eps_buy must lie in [0, 10], got {self.eps_buy}"
            )


@dataclass(frozen=True)
class PortfolioState:
    """Time, stock fraction and total wealth of the investor."""

    t: float
    x: float
    w: float

    def __post_init__(self) -> None:
        if not (self.t >= 0.0):
            raise ValidationError(f"t must be non-negative, got {self.t}")
        if not (0.0 <= self.x <= 1.0):
            raise ValidationError(f"x must lie in [0, 1], got {self.x}")
        if not (self.w > 0.0):
            raise ValidationError(f"w must be positive, got {self.w}")


def merton_fraction(params: ModelParams) -> float:
    """Frictionless optimal stock fraction mu / (gamma * sigma**2)."""
    return params.mu / (params.gamma * params.sigma**2)


def q_of(params: ModelParams, x):
    """Running reward rate Q(x) of the reduced value function.

    Q(x) = -gamma*(1-gamma)*sigma^2*(x - y_M)^2 / 2
           + gamma*(1-gamma)*sigma^2*y_M^2 / 2,

    a parabola with vertex at the Merton fraction y_M; Q(0) = 0.
    Accepts scalars or arrays.
    """
    g, s = params.gamma, params.sigma
    y_m = merton_fraction(params)
    coeff = g * (1.0 - g) * s**2 / 2.0
    return -coeff * (np.asarray(x, dtype=float) - y_m) ** 2 + coeff * y_m**2


def q_sup_norm(params: ModelParams) -> float:
    """Max of |Q| over the admissible fractions [0, 1].

    Q is a parabola, so the extrema lie at the endpoints or at the vertex.
    """
    y_m = merton_fraction(params)
    candidates = [0.0, 1.0]
    if 0.0 < y_m < 1.0:
        candidates.append(y_m)
    return float(max(abs(float(q_of(params, c))) for c in candidates))


def merton_value(params: ModelParams, t: float) -> float:
    """Frictionless reduced value exp(Q(y_M) * (T - t)).

    This is the reduced value of an investor who can hold the Merton
    fraction continuously at no cost; it dominates the frictional value
    for gamma < 1 (and is dominated for gamma > 1, in the raw v scale).
    """
    if not (0.0 <= t <= params.T):
        raise ValidationError(f"t must lie in [0, T], got {t}")
    y_m = merton_fraction(params)
    return math.exp(float(q_of(params, y_m)) * (params.T - t))


def value_bounds(params: ModelParams) -> tuple[float, float]:
    """A-priori lower/upper bounds for the reduced value v on [0, T] x [0, 1].

    For gamma < 1:
        exp(-|(1-gamma)(mu - gamma*sigma^2/2)| T)  <=  v  <=  exp(+||Q|| T).
    For gamma > 1:
        exp(-||Q|| T)  <=  v  <=  1 + exp(|(1-gamma)(mu - gamma*sigma^2/2)| T),
    with ||Q|| the sup norm of Q over [0, 1].
    """
    g = params.gamma
    rate = abs((1.0 - g) * (params.mu - g * params.sigma**2 / 2.0)) * params.T
    qn = q_sup_norm(params) * params.T
    if g < 1.0:
        return math.exp(-rate), math.exp(qn)
    return math.exp(-qn), 1.0 + math.exp(rate)


def rebalance_bounds(state: PortfolioState, params: ModelParams) -> tuple[float, float]:
    """Admissible stock-trade amounts (m_min, m_max) at a trading time.

    A trade of size m (in currency units of stock bought; negative = sale)
    must keep both post-trade accounts non-negative:

        -x*w  <=  m  <=  (1-x)*w / (1 + eps_buy).
    """
    w0 = (1.0 - state.x) * state.w
    w1 = state.x * state.w
    return -w1, w0 / (1.0 + params.eps_buy)


def utility(w, gamma: float):
    """Power utility w**(1-gamma) / (1-gamma); accepts scalars or arrays."""
    return np.asarray(w, dtype=float) ** (1.0 - gamma) / (1.0 - gamma)
