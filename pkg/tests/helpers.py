"""Shared construction helpers for the test suite."""

from morseplan.model import MarketParams, PlanSpec


def market_with(rbar: float, sigma: float = 0.3) -> MarketParams:
    """Market whose blended drift and volatility hit the given targets."""
    omega = 0.9
    return MarketParams(risk_free=rbar, equity_mean=rbar, equity_vol=sigma / omega,
                        equity_fraction=omega)


def plan_default(**kw) -> PlanSpec:
    base = dict(horizon_years=20.0, initial_wealth=5e5, target_wealth=2.5e6,
                u0_bounds=(1e4, 1e5), xi_bounds=(0.025, 0.05),
                confidence_levels=(0.05,))
    base.update(kw)
    return PlanSpec(**base)
