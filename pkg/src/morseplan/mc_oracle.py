"""Monte Carlo oracle for the controlled portfolio SDE.

Simulates dPi = (rbar Pi + u0 e^(xi t)) dt + sigma Pi dW by Euler-Maruyama,
either in wealth coordinates or in the logistic (Verhulst) coordinate
v = 2 u_t / (sigma^2 Pi).  Entirely independent of the spectral solver; the
two are cross-validated against each other in the acceptance suite.

Paths are generated in fixed-size batches, each batch drawing from its own
counter-keyed Philox stream derived from the seed, so estimates are
bit-reproducible and the batch reduction is order-independent.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import MarketParams, PlanSpec

__all__ = [
    "SimConfig",
    "TailEstimate",
    "simulate_tail",
    "simulate_tail_verhulst",
    "deterministic_terminal_wealth",
]

_BATCH = 50_000
_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class SimConfig:
    """Simulation controls; identical configs reproduce identical estimates."""

    n_paths: int = 200_000
    steps_per_year: int = 252
    seed: int = 0
    coordinate: str = "wealth"  # "wealth" | "verhulst"
    scheme: str = "euler"
    threads: int = 1

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("SimConfig: n_paths must be >= 1")
        if self.steps_per_year < 1:
            raise ValueError("SimConfig: steps_per_year must be >= 1")
        if self.coordinate not in ("wealth", "verhulst"):
            raise ValueError(f"SimConfig: unknown coordinate {self.coordinate!r}")
        if self.scheme != "euler":
            raise ValueError(f"SimConfig: unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    std_error: float
    n_paths: int


def _batch_sizes(total: int) -> list[int]:
    sizes = [_BATCH] * (total // _BATCH)
    if total % _BATCH:
        sizes.append(total % _BATCH)
    return sizes


def _run_batches(worker, config: SimConfig) -> TailEstimate:
    sizes = _batch_sizes(config.n_paths)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            hits = list(pool.map(worker, range(len(sizes)), sizes))
    else:
        hits = [worker(i, n) for i, n in enumerate(sizes)]
    total_hits = int(sum(hits))
    p = total_hits / config.n_paths
    se = math.sqrt(p * (1.0 - p) / config.n_paths)
    return TailEstimate(p_hat=p, std_error=se, n_paths=config.n_paths)


def simulate_tail(plan: PlanSpec, market: MarketParams, u0: float, xi: float,
                  config: SimConfig) -> TailEstimate:
    """Estimate P[Pi_T < target] for the policy (u0, xi) in wealth coordinates.

    Unlike the spectral path, u0 = 0 is allowed here (pure geometric
    Brownian motion); the oracle covers that limit in its own tests.
    """
    if u0 < 0:
        raise ValueError(f"simulate_tail: u0 must be >= 0, got {u0}")
    rbar, sigma = market.rbar, market.sigma
    T = plan.horizon_years
    dt = 1.0 / config.steps_per_year
    n_steps = round(T * config.steps_per_year)
    sqdt = sigma * math.sqrt(dt)
    # contribution inflow per step, precomputed over the grid
    inflow = u0 * np.exp(xi * dt * np.arange(n_steps)) * dt

    def batch(idx: int, n: int) -> int:
        rng = np.random.Generator(np.random.Philox(key=[config.seed, idx]))
        pi = np.full(n, plan.initial_wealth)
        for k in range(n_steps):
            pi *= 1.0 + rbar * dt + sqdt * rng.standard_normal(n)
            pi += inflow[k]
            np.maximum(pi, _FLOOR, out=pi)
        return int(np.count_nonzero(pi < plan.target_wealth))

    return _run_batches(batch, config)


def simulate_tail_verhulst(plan: PlanSpec, market: MarketParams, u0: float, xi: float,
                           config: SimConfig) -> TailEstimate:
    """Same tail probability via the logistic coordinate v_t.

    dv = v (xi - rbar + sigma^2 - (sigma^2/2) v) dt + sigma v dW, started at
    v0 = 2 u0 / (sigma^2 Pi_0); the event {Pi_T < target} maps to
    {v_T > v_hat}.  Must agree with simulate_tail within Monte Carlo noise.
    """
    if not u0 > 0:
        raise ValueError(f"simulate_tail_verhulst: u0 must be > 0, got {u0}")
    rbar, sigma = market.rbar, market.sigma
    hbar = sigma * sigma
    T = plan.horizon_years
    dt = 1.0 / config.steps_per_year
    n_steps = round(T * config.steps_per_year)
    sqdt = sigma * math.sqrt(dt)
    v0 = 2.0 * u0 / (hbar * plan.initial_wealth)
    v_hat = 2.0 * u0 * math.exp(xi * T) / (hbar * plan.target_wealth)
    a = xi - rbar + hbar

    def batch(idx: int, n: int) -> int:
        rng = np.random.Generator(np.random.Philox(key=[config.seed, idx]))
        v = np.full(n, v0)
        for _ in range(n_steps):
            v += v * ((a - 0.5 * hbar * v) * dt + sqdt * rng.standard_normal(n))
            np.maximum(v, _FLOOR, out=v)
        return int(np.count_nonzero(v > v_hat))

    return _run_batches(batch, config)


def deterministic_terminal_wealth(plan: PlanSpec, market: MarketParams,
                                  u0: float, xi: float) -> float:
    """Noise-free terminal wealth: the sigma -> 0 ODE solved in closed form."""
    rbar = market.rbar
    T = plan.horizon_years
    if abs(rbar - xi) < 1e-14:
        return (plan.initial_wealth + u0 * T) * math.exp(rbar * T)
    return (plan.initial_wealth * math.exp(rbar * T)
            + u0 * (math.exp(rbar * T) - math.exp(xi * T)) / (rbar - xi))
