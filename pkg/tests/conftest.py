"""Shared fixtures: the reference market solved once per test session."""

import pytest

from illiq.hjb import make_grid, solve
from illiq.model import ModelParams
from illiq.no_trade import extract_region

REFERENCE = dict(mu=0.2, sigma=1.0, gamma=0.9, T=1.0, eps_buy=0.05, eps_sell=0.05, lam=3.0)


@pytest.fixture(scope="session")
def ref_params():
    return ModelParams(**REFERENCE)


@pytest.fixture(scope="session")
def ref_surface(ref_params):
    return solve(ref_params, make_grid(n_z=2000), n_t=1000)


@pytest.fixture(scope="session")
def ref_region(ref_surface):
    return extract_region(ref_surface)
