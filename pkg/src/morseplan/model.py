"""Plan/market inputs, derived model constants, and coordinate transforms.

The solvable coordinate chain is

    wealth Pi  ->  v = 2*u_t/(sigma^2 Pi)  ->  x = -log v  ->  y = e^-x = v

with u_t = u0*exp(xi*t) the contribution policy.  Everything downstream
(the spectral solver, the surface builder) works in the dimensionless y
coordinate; this module owns the maps in and out of it plus the potentials
driving the dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "PlanSpec",
    "MarketParams",
    "GateReport",
    "DerivedParams",
    "ControlPoint",
    "derive_params",
    "control_point",
    "u0_to_y0",
    "y0_to_u0",
    "langevin_potential",
    "exp_potential_morse",
    "schrodinger_potential",
    "schrodinger_potential_direct",
    "DEFAULT_Q",
]

DEFAULT_Q = 1.25


@dataclass(frozen=True)
class PlanSpec:
    """User goal: horizon, initial and target wealth, admissible controls."""

    horizon_years: float
    initial_wealth: float
    target_wealth: float
    u0_bounds: tuple[float, float]
    xi_bounds: tuple[float, float]
    confidence_levels: tuple[float, ...]

    def __post_init__(self):
        if not self.horizon_years > 0:
            raise ValueError("PlanSpec: horizon_years must be > 0")
        if not self.initial_wealth > 0:
            raise ValueError("PlanSpec: initial_wealth must be > 0")
        if not self.target_wealth > 0:
            raise ValueError("PlanSpec: target_wealth must be > 0")
        for name, (lo, hi) in (("u0_bounds", self.u0_bounds), ("xi_bounds", self.xi_bounds)):
            if not lo <= hi:
                raise ValueError(f"PlanSpec: {name} must be ordered (min <= max)")
        if not self.u0_bounds[0] > 0:
            raise ValueError("PlanSpec: u0 lower bound must be > 0 "
                             "(zero contribution degenerates the expansion)")
        for a in self.confidence_levels:
            if not 0.0 < a < 1.0:
                raise ValueError(f"PlanSpec: confidence level {a} outside (0, 1)")


@dataclass(frozen=True)
class MarketParams:
    """Market assumptions for the fixed-mix portfolio."""

    risk_free: float
    equity_mean: float
    equity_vol: float
    equity_fraction: float
    txn_cost: float = 0.0

    def __post_init__(self):
        if not self.equity_vol > 0:
            raise ValueError("MarketParams: equity_vol must be > 0")
        if not 0.0 <= self.equity_fraction <= 1.0:
            raise ValueError("MarketParams: equity_fraction must be in [0, 1]")
        if self.txn_cost < 0:
            raise ValueError("MarketParams: txn_cost must be >= 0")

    @property
    def rbar(self) -> float:
        """Blended portfolio drift r_f + omega*(re - r_f)."""
        return self.risk_free + self.equity_fraction * (self.equity_mean - self.risk_free)

    @property
    def sigma(self) -> float:
        """Portfolio volatility omega * sigma_e."""
        return self.equity_fraction * self.equity_vol


@dataclass(frozen=True)
class GateReport:
    """Validation gates on the derived constants.

    The three constraints guard, respectively: convergence of the norm-series
    tail (s > -1/4), positivity of the power-function expansion order
    (q > s), and a vanishing probability current at the origin (q > -s).
    Violations are reported, never silently swallowed.
    """

    series_convergence: bool
    norm_expansion: bool
    vanishing_current: bool
    messages: tuple[str, ...] = ()

    @property
    def all_pass(self) -> bool:
        return self.series_convergence and self.norm_expansion and self.vanishing_current

    def raise_if_failed(self) -> None:
        if not self.all_pass:
            raise ValueError("parameter gates failed: " + "; ".join(self.messages))


@dataclass(frozen=True)
class DerivedParams:
    """All model constants for one growth rate xi."""

    rbar: float
    sigma: float
    hbar: float       # sigma^2, the diffusion scale
    eta: float        # xi - rbar + hbar/2
    s: float          # eta / hbar
    g: float          # 2s + 1, selects the potential branch by sign
    q: float
    kappa: float      # q - s
    D0: float
    U0: float
    eps0: float
    xi: float
    gates: GateReport = field(compare=False)

    @property
    def branch(self) -> str:
        return "plus" if self.g > 0 else "minus"

    @property
    def tail_kernel_order(self) -> float:
        """Exponent q + s of the tail-weight kernel y^(q+s-1) e^-y.

        Note this is q + s, not the kappa = q - s bundled above: expanding
        the tail indicator against the orthonormal basis picks up the
        e^-V/hbar = y^s factor with a plus sign.  Using q - s here breaks
        the Feynman-Kac identity and disagrees with Monte Carlo by ~0.1 in
        probability; both checks pin the sign.
        """
        return self.q + self.s


def derive_params(market: MarketParams, xi: float, q: float = DEFAULT_Q) -> DerivedParams:
    """Derive all spectral-model constants for a growth rate xi."""
    if abs(xi) >= 1.0:
        raise ValueError(f"derive_params: |xi| must be < 1/year, got {xi}")
    if not q > 0:
        raise ValueError(f"derive_params: q must be > 0, got {q}")
    rbar = market.rbar
    sigma = market.sigma
    hbar = sigma * sigma
    eta = xi - rbar + hbar / 2.0
    s = eta / hbar
    g = 2.0 * s + 1.0
    D0 = hbar * hbar * g * g / 8.0
    U0 = -hbar * hbar * (2.0 * g - 1.0) / 8.0
    eps0 = 2.0 * U0 / (hbar * hbar) + s + 0.25

    msgs = []
    gate_series = s > -0.25
    if not gate_series:
        msgs.append(f"s = {s:.4f} <= -1/4: norm-series tail diverges")
    gate_norm = q > s
    if not gate_norm:
        msgs.append(f"q = {q:.4f} <= s = {s:.4f}: power-function expansion order not positive")
    gate_current = q > -s
    if not gate_current:
        msgs.append(f"q = {q:.4f} <= -s = {-s:.4f}: probability current does not vanish at y=0")
    gates = GateReport(gate_series, gate_norm, gate_current, tuple(msgs))

    return DerivedParams(
        rbar=rbar, sigma=sigma, hbar=hbar, eta=eta, s=s, g=g, q=q,
        kappa=q - s, D0=D0, U0=U0, eps0=eps0, xi=xi, gates=gates,
    )


@dataclass(frozen=True)
class ControlPoint:
    """A policy (u0, xi) mapped into Morse coordinates."""

    u0: float
    xi: float
    y0: float
    y_hat: float


def u0_to_y0(u0: float, initial_wealth: float, hbar: float) -> float:
    return 2.0 * u0 / (hbar * initial_wealth)


def y0_to_u0(y0: float, initial_wealth: float, hbar: float) -> float:
    return 0.5 * hbar * y0 * initial_wealth


def control_point(plan: PlanSpec, params: DerivedParams, u0: float,
                  xi: float | None = None) -> ControlPoint:
    """Initial Morse coordinate y0 and target coordinate y_hat for a policy."""
    if not u0 > 0:
        raise ValueError(f"control_point: u0 must be > 0, got {u0}")
    xi_val = params.xi if xi is None else xi
    y0 = u0_to_y0(u0, plan.initial_wealth, params.hbar)
    y_hat = 2.0 * u0 * math.exp(xi_val * plan.horizon_years) / (params.hbar * plan.target_wealth)
    return ControlPoint(u0=u0, xi=xi_val, y0=y0, y_hat=y_hat)


def langevin_potential(params: DerivedParams, x: float) -> float:
    """Drift potential V(x) = eta*x + (sigma^2/2) e^-x of the log coordinate."""
    return params.eta * x + 0.5 * params.hbar * math.exp(-x)


def exp_potential_morse(params: DerivedParams, y, sign: int = -1):
    """exp(sign * V / hbar) expressed in the Morse coordinate y = e^-x.

    sign=-1 gives y^(eta/hbar) e^(-y/2); sign=+1 its reciprocal.
    Accepts scalars or arrays.
    """
    import numpy as np

    y = np.asarray(y, dtype=float)
    if sign == -1:
        out = y ** params.s * np.exp(-y / 2.0)
    elif sign == +1:
        out = y ** (-params.s) * np.exp(y / 2.0)
    else:
        raise ValueError("exp_potential_morse: sign must be +1 or -1")
    return float(out) if out.ndim == 0 else out


def schrodinger_potential(params: DerivedParams, x: float) -> float:
    """Morse-form potential U(x) via the branch expression.

    For g > 0 this is D0*(1 - e^-(x - x*))^2 + U0 with x* = -log|g|; for
    g < 0 the inner sign flips.  Agrees with the derivative-based form
    (see schrodinger_potential_direct) to round-off.
    """
    g = params.g
    h2 = params.hbar * params.hbar
    if g == 0.0:
        # minimum pushed to infinity; expanded form stays finite
        return 0.125 * h2 * (1.0 + math.exp(-2.0 * x))
    x_star = -math.log(abs(g))
    e = math.exp(-(x - x_star))
    if g > 0:
        return params.D0 * (1.0 - e) ** 2 + params.U0
    return params.D0 * (1.0 + e) ** 2 + params.U0


def schrodinger_potential_direct(params: DerivedParams, x: float) -> float:
    """U(x) = (1/2)(V')^2 - (hbar/2) V'' computed from the drift potential."""
    e = math.exp(-x)
    vp = params.eta - 0.5 * params.hbar * e
    vpp = 0.5 * params.hbar * e
    return 0.5 * vp * vp - 0.5 * params.hbar * vpp
