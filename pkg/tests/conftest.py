"""Shared fixtures: the canonical retirement scenario and small prebuilt artifacts.

The canonical scenario pins T = 20y, initial wealth $0.5m, target $2.5m,
portfolio volatility 30% (90% equity at 33.3% vol), and blended drift
rbar = 6.5% (2% cash, 7% equity mean).  Admissible controls are
u0 in [$10k, $100k] and xi in [2.5%, 5%].  The "wide" variant extends the
contribution band to $350k so that all six stock confidence levels have
non-empty frontiers.
"""

from __future__ import annotations

from dataclasses import replace

import pytest

from morseplan.service.config import PlanConfig, parse_config

CANONICAL_DOC = {
    "plan": {
        "horizon_years": 20.0,
        "initial_wealth": 5.0e5,
        "target_wealth": 2.5e6,
        "u0_bounds": [1.0e4, 1.0e5],
        "xi_bounds": [0.025, 0.05],
        "confidence_levels": [0.03, 0.05, 0.075, 0.10, 0.15, 0.20],
    },
    "market": {
        "risk_free": 0.02,
        "equity_mean": 0.07,
        "equity_vol": 1.0 / 3.0,
        "equity_fraction": 0.9,
        "txn_cost": 0.0,
    },
}

WIDE_DOC = {
    **CANONICAL_DOC,
    "plan": {**CANONICAL_DOC["plan"], "u0_bounds": [1.0e4, 3.5e5]},
}


@pytest.fixture(scope="session")
def canonical_config() -> PlanConfig:
    return parse_config(CANONICAL_DOC)


@pytest.fixture(scope="session")
def wide_config() -> PlanConfig:
    return parse_config(WIDE_DOC)


@pytest.fixture(scope="session")
def small_solver_config(canonical_config):
    """Coarse grid for unit tests that need a full surface quickly."""
    return replace(canonical_config.solver, y_count=24, xi_count=8)


@pytest.fixture(scope="session")
def small_archive(canonical_config, small_solver_config):
    from morseplan.service.config import PlanConfig
    from morseplan.service.queries import build_archive

    config = PlanConfig(plan=canonical_config.plan, market=canonical_config.market,
                        solver=small_solver_config)
    return build_archive(config, with_frontiers=True)


@pytest.fixture(scope="session")
def wide_archive(wide_config):
    """Default-resolution surface + frontiers on the wide scenario."""
    from morseplan.service.queries import build_archive

    return build_archive(wide_config, with_frontiers=True)
