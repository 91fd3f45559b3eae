"""Plan configuration files: strict JSON parsing with defaults.

Parse-then-validate: the JSON structure is checked first (unknown keys are
rejected at every level, required keys must be present), then the domain
types run their own invariants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..model import MarketParams, PlanSpec
from ..serialize import config_hash
from ..surface import SolverConfig

__all__ = ["PlanConfig", "ConfigError", "load_config", "parse_config", "config_to_dict"]


class ConfigError(ValueError):
    """Malformed or invalid plan configuration."""


_PLAN_KEYS = {
    "horizon_years": (True, None),
    "initial_wealth": (True, None),
    "target_wealth": (True, None),
    "u0_bounds": (True, None),
    "xi_bounds": (True, None),
    "confidence_levels": (False, (0.03, 0.05, 0.075, 0.10, 0.15, 0.20)),
}

_MARKET_KEYS = {
    "risk_free": (True, None),
    "equity_mean": (True, None),
    "equity_vol": (True, None),
    "equity_fraction": (True, None),
    "txn_cost": (False, 0.0),
}

_SOLVER_KEYS = {
    "N": (False, 150),
    "q": (False, 1.25),
    "y_count": (False, 100),
    "xi_count": (False, 20),
    "refine_factor": (False, 8),
    "frontier_tol": (False, 2e-3),
    "threads": (False, 1),
}


@dataclass(frozen=True)
class PlanConfig:
    plan: PlanSpec
    market: MarketParams
    solver: SolverConfig

    @property
    def plan_id(self) -> str:
        return config_hash(config_to_dict(self))


def _take_section(doc: dict, name: str, schema: dict, required: bool) -> dict:
    section = doc.get(name)
    if section is None:
        if required:
            raise ConfigError(f"config: missing required section {name!r}")
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(f"config: section {name!r} must be an object")
    unknown = set(section) - set(schema)
    if unknown:
        raise ConfigError(f"config: unknown keys in {name!r}: {sorted(unknown)}")
    out = {}
    for key, (req, default) in schema.items():
        if key in section:
            out[key] = section[key]
        elif req:
            raise ConfigError(f"config: {name}.{key} is required")
        else:
            out[key] = default
    return out


def parse_config(doc: dict) -> PlanConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    unknown = set(doc) - {"plan", "market", "solver"}
    if unknown:
        raise ConfigError(f"config: unknown top-level keys: {sorted(unknown)}")
    plan_raw = _take_section(doc, "plan", _PLAN_KEYS, required=True)
    market_raw = _take_section(doc, "market", _MARKET_KEYS, required=True)
    solver_raw = _take_section(doc, "solver", _SOLVER_KEYS, required=False)
    try:
        plan = PlanSpec(
            horizon_years=float(plan_raw["horizon_years"]),
            initial_wealth=float(plan_raw["initial_wealth"]),
            target_wealth=float(plan_raw["target_wealth"]),
            u0_bounds=tuple(float(v) for v in plan_raw["u0_bounds"]),
            xi_bounds=tuple(float(v) for v in plan_raw["xi_bounds"]),
            confidence_levels=tuple(float(v) for v in plan_raw["confidence_levels"]),
        )
        market = MarketParams(
            risk_free=float(market_raw["risk_free"]),
            equity_mean=float(market_raw["equity_mean"]),
            equity_vol=float(market_raw["equity_vol"]),
            equity_fraction=float(market_raw["equity_fraction"]),
            txn_cost=float(market_raw["txn_cost"]),
        )
        solver = SolverConfig(
            N=int(solver_raw["N"]),
            q=float(solver_raw["q"]),
            y_count=int(solver_raw["y_count"]),
            xi_count=int(solver_raw["xi_count"]),
            refine_factor=int(solver_raw["refine_factor"]),
            frontier_tol=float(solver_raw["frontier_tol"]),
            threads=int(solver_raw["threads"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from exc
    return PlanConfig(plan=plan, market=market, solver=solver)


def load_config(path: str | Path) -> PlanConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)


def config_to_dict(config: PlanConfig) -> dict:
    """The round-trippable plain-dict form (also the hashing subject)."""
    return {
        "plan": {
            "horizon_years": config.plan.horizon_years,
            "initial_wealth": config.plan.initial_wealth,
            "target_wealth": config.plan.target_wealth,
            "u0_bounds": list(config.plan.u0_bounds),
            "xi_bounds": list(config.plan.xi_bounds),
            "confidence_levels": list(config.plan.confidence_levels),
        },
        "market": {
            "risk_free": config.market.risk_free,
            "equity_mean": config.market.equity_mean,
            "equity_vol": config.market.equity_vol,
            "equity_fraction": config.market.equity_fraction,
            "txn_cost": config.market.txn_cost,
        },
        "solver": {
            "N": config.solver.N,
            "q": config.solver.q,
            "y_count": config.solver.y_count,
            "xi_count": config.solver.xi_count,
            "refine_factor": config.solver.refine_factor,
            "frontier_tol": config.solver.frontier_tol,
            "threads": config.solver.threads,
        },
    }
