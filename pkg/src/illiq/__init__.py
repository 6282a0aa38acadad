"""Optimal investment with proportional transaction costs and Poisson-arrival
trading opportunities.

Solver for the reduced Hamilton-Jacobi-Bellman equation of the stock-fraction
formulation, extraction of the no-trade region, an independent quadrature
oracle for the stochastic representation of the value, an event-driven Monte
Carlo simulator, and the closed-form small-cost / high-intensity asymptotics
that connect the two friction limits.
"""

from .asymptotics import (
    SweepRecord,
    a1,
    a2,
    coefficient_curve,
    continuous_benchmark,
    continuous_limit_coefficients,
    coupling_c,
    discrete_benchmark,
    discrete_limit_coefficient,
    predicted_value_decrease,
    predicted_width,
    sweep,
)
from .config import RunConfig, load_config, parse_config
from .errors import ConcavityError, NumericalError, ValidationError
from .fk import density, expected_z, fk_deriv, fk_value
from .hjb import SpatialGrid, ValueSurface, make_grid, read_surface_csv, solve
from .model import (
    ModelParams,
    PortfolioState,
    merton_fraction,
    merton_value,
    q_of,
    q_sup_norm,
    rebalance_bounds,
    utility,
    value_bounds,
)
from .no_trade import (
    NoTradeRegion,
    extract_boundaries,
    extract_region,
    foc_residual,
    threshold_times,
    threshold_times_integral,
    write_region_csv,
)
from .policy import Policy, PolicyEvalResult, simulate, target_fraction, trade_amount

__all__ = [
    "ConcavityError",
    "NumericalError",
    "ValidationError",
    "ModelParams",
    "PortfolioState",
    "merton_fraction",
    "merton_value",
    "q_of",
    "q_sup_norm",
    "rebalance_bounds",
    "utility",
    "value_bounds",
    "SpatialGrid",
    "ValueSurface",
    "make_grid",
    "solve",
    "read_surface_csv",
    "NoTradeRegion",
    "extract_boundaries",
    "extract_region",
    "foc_residual",
    "threshold_times",
    "threshold_times_integral",
    "write_region_csv",
    "density",
    "expected_z",
    "fk_value",
    "fk_deriv",
    "Policy",
    "PolicyEvalResult",
    "simulate",
    "target_fraction",
    "trade_amount",
    "SweepRecord",
    "a1",
    "a2",
    "coupling_c",
    "coefficient_curve",
    "continuous_benchmark",
    "continuous_limit_coefficients",
    "discrete_benchmark",
    "discrete_limit_coefficient",
    "predicted_width",
    "predicted_value_decrease",
    "sweep",
    "RunConfig",
    "load_config",
    "parse_config",
]

__version__ = "0.1.0"
