"""Research instrumentation: probability current, norm bookkeeping,
finite-truncation kernels, and asymptotic cross-checks.

Everything in this module is advisory.  Production queries never gate on
these numbers, but CI runs them at documented tolerances because they are
the sharpest available probes of truncation health.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .model import DerivedParams
from .spectral import QuasiNumberBasis, WeightVector, basis_values
from .specfun import laguerre_table

__all__ = [
    "NormReport",
    "probability_current",
    "total_norm",
    "norm_partial_sum",
    "norm_residual_estimate",
    "FiniteTruncationDensity",
    "finite_n_initial_density",
    "backward_initial_asymptotic",
]


@dataclass(frozen=True)
class NormReport:
    """Total mass of the forward density plus a truncation-residual estimate."""

    total_norm: float
    residual_estimate: float
    gates_pass: bool
    messages: tuple[str, ...] = ()


def probability_current(basis: QuasiNumberBasis, weights: WeightVector,
                        params: DerivedParams, y: float) -> float:
    """Probability current J(y, t) of the forward problem.

    J = (hbar/2) y^s e^(-y/2) sum_n w_n [C_n phi_{n-1} - (s + q + n) phi_n]
    with phi_{-1} = 0.  Vanishes at y -> 0 like y^(s+q) whenever q > -s.
    """
    if weights.kind != "forward":
        raise ValueError("probability_current: weights must be forward-kind")
    if not y > 0:
        raise ValueError(f"probability_current: y must be > 0, got {y}")
    N, q, s = basis.N, basis.q, params.s
    n = np.arange(N, dtype=float)
    phi = basis_values(basis, y)
    phi_down = np.zeros(N)
    phi_down[1:] = phi[:-1]
    c_n = np.sqrt(n * (n + 2.0 * q - 1.0))
    inner = weights.values @ (c_n * phi_down - (s + q + n) * phi)
    return 0.5 * params.hbar * y ** s * math.exp(-0.5 * y) * inner


def _norm_coefficients(basis: QuasiNumberBasis, params: DerivedParams) -> np.ndarray:
    """Coefficients of the linear norm functional integral f dx = c . w."""
    n = np.arange(basis.N, dtype=float)
    q, s = basis.q, params.s
    log_ratio = math.lgamma(q + s) - math.lgamma(q - s)
    return np.exp(log_ratio + gammaln(n + q - s) - 0.5 * (gammaln(n + 1.0) + gammaln(n + 2.0 * q)))


def total_norm(basis: QuasiNumberBasis, weights: WeightVector, params: DerivedParams,
               y0: float | None = None) -> NormReport:
    """Total probability mass carried by a forward weight vector.

    The norm functional is linear in the weights (not quadratic as in the
    usual quantum normalization); at t = 0 the untruncated series sums to 1
    exactly.  ``y0`` feeds the truncation-residual estimate when known.
    """
    if weights.kind != "forward":
        raise ValueError("total_norm: weights must be forward-kind")
    msgs = []
    gates_ok = params.gates.all_pass and params.q > abs(params.s)
    if not params.gates.all_pass:
        msgs.extend(params.gates.messages)
    if not params.q > abs(params.s):
        msgs.append(f"q = {params.q} <= |s| = {abs(params.s)}: norm series unreliable")
    value = float(_norm_coefficients(basis, params) @ weights.values)
    residual = norm_residual_estimate(y0, basis.N, params) if y0 is not None else math.nan
    return NormReport(total_norm=value, residual_estimate=residual,
                      gates_pass=gates_ok, messages=tuple(msgs))


def norm_partial_sum(y0: float, N: int, params: DerivedParams) -> float:
    """First N terms of the t = 0 norm identity series (exact limit: 1).

    This is the direct-summation side of the residual cross-check:
    1 - norm_partial_sum(y0, N) is the true truncation deficit.
    """
    if not y0 > 0:
        raise ValueError(f"norm_partial_sum: y0 must be > 0, got {y0}")
    q, s = params.q, params.s
    n = np.arange(N, dtype=float)
    man, exp2 = laguerre_table(2.0 * q - 1.0, N, np.array([y0]))
    man, exp2 = man[:, 0], exp2[:, 0]
    log_coef = gammaln(n + q - s) - gammaln(n + 2.0 * q)
    with np.errstate(divide="ignore"):
        log_abs = np.where(man != 0.0, np.log(np.abs(np.where(man == 0.0, 1.0, man))), -np.inf)
    terms = np.sign(man) * np.exp(log_coef + log_abs + exp2 * math.log(2.0))
    pref = math.exp(math.lgamma(q + s) - math.lgamma(q - s)) * y0 ** (q - s)
    return pref * float(np.sum(terms))


def norm_residual_estimate(y0: float, N: int, params: DerivedParams) -> float:
    """Leading asymptotic estimate of the norm-series tail beyond N.

    Derived by replacing the terms with their large-n asymptotics and
    integrating:

        P_{>N} ~ [G(q+s)/G(q-s)] * (e^(y0/2)/sqrt(pi)) * (y0 N)^(-s-1/4)
                 * cos(2 sqrt(y0 N) - pi (q - 3/4))

    Requires s > -1/4 for the tail to converge at all.  Being an oscillatory
    leading-order formula, it tracks the true deficit tightly near the
    oscillation extrema and only loosely near its zero crossings.
    """
    if not y0 > 0:
        raise ValueError(f"norm_residual_estimate: y0 must be > 0, got {y0}")
    q, s = params.q, params.s
    if not s > -0.25:
        raise ValueError(f"norm_residual_estimate: requires s > -1/4, got s = {s}")
    pref = math.exp(math.lgamma(q + s) - math.lgamma(q - s))
    amp = pref * math.exp(0.5 * y0) / math.sqrt(math.pi) * (y0 * N) ** (-s - 0.25)
    phase = 2.0 * math.sqrt(y0 * N) - math.pi * (q - 0.75)
    return amp * math.cos(phase)


@dataclass(frozen=True)
class FiniteTruncationDensity:
    """Exact finite-N initial density and its large-N oscillatory form."""

    exact: float
    asymptotic: float
    envelope: float


def finite_n_initial_density(y: float, y0: float, N: int,
                             params: DerivedParams) -> FiniteTruncationDensity:
    """Finite-N approximation to the initial forward density f_N(y, 0).

    ``exact`` evaluates the closed-form kernel (the order-N two-term ratio
    that telescopes the basis sum); near y = y0 the removable 1/(y - y0)
    singularity is taken by its derivative limit.  ``asymptotic`` is the
    three-oscillatory-term large-N form, reliable once
    |sqrt(y) - sqrt(y0)| * sqrt(N) is a few units.  ``envelope`` bounds the
    local oscillation amplitude, the natural yardstick for comparing the two.
    """
    if not (y > 0 and y0 > 0):
        raise ValueError("finite_n_initial_density: y and y0 must be > 0")
    q, s = params.q, params.s
    alpha = 2.0 * q - 1.0

    # exact closed-form kernel
    man, exp2 = laguerre_table(alpha, N + 1, np.array([y, y0]))
    vals = np.ldexp(man, exp2.astype(np.int32))
    l_y, l_y0 = vals[:, 0], vals[:, 1]
    pref = math.exp(math.lgamma(N + 1.0) - math.lgamma(N + 2.0 * q - 1.0))
    if abs(y - y0) > 1e-9 * max(y, y0):
        kernel = (l_y[N - 1] * l_y0[N] - l_y[N] * l_y0[N - 1]) / (y - y0)
    else:
        # derivative limit via d/dx L_n^(a) = -L_{n-1}^(a+1)
        man2, exp22 = laguerre_table(alpha + 1.0, N + 1, np.array([y]))
        dvals = -np.ldexp(man2, exp22.astype(np.int32))[:, 0]
        d_lm1 = dvals[N - 2] if N >= 2 else 0.0
        d_l = dvals[N - 1]
        kernel = l_y[N] * d_lm1 - l_y[N - 1] * d_l
    exact = y ** (q + s - 1.0) * y0 ** (q - s) * math.exp(-y) * pref * kernel

    # large-N three-term oscillatory form
    r = math.sqrt(N)
    d = math.sqrt(y) - math.sqrt(y0)
    u = math.sqrt(y) + math.sqrt(y0)
    t_diff = math.sin(2.0 * r * d) / d if abs(d) > 1e-12 else 2.0 * r
    t_sum = (math.sin(2.0 * math.pi * q) * math.sin(2.0 * r * u)
             + math.cos(2.0 * math.pi * q) * math.cos(2.0 * r * u)) / u
    front = (0.5 / math.pi) * y ** -0.5 * (y / y0) ** (s - 0.25) * math.exp(-0.5 * (y - y0))
    asym = front * (t_diff + t_sum)
    env = abs(front) * ((1.0 / abs(d) if abs(d) > 1e-12 else 2.0 * r) + 1.0 / u)
    return FiniteTruncationDensity(exact=exact, asymptotic=asym, envelope=env)


def backward_initial_asymptotic(y: float, y_hat: float, N: int, params: DerivedParams,
                                flag_threshold: float = 0.5):
    """Large-N form of the initial backward wave function.

    Leading term y^(k - 5/4) e^(-y/2) theta(y > y_hat) with k = q + s (the
    tail-kernel order), plus the slowly-dying O(1/omega) oscillatory
    correction, omega = 2 sqrt(N).  At the step the leading term takes the
    half-value convention.  Returns (value, flagged) where ``flagged`` marks
    points at which the correction magnitude exceeds ``flag_threshold`` of
    the leading term, i.e. where the expansion has left its validity window.
    """
    if not (y > 0 and y_hat > 0):
        raise ValueError("backward_initial_asymptotic: y and y_hat must be > 0")
    k = params.tail_kernel_order
    omega = 2.0 * math.sqrt(N)
    if y > y_hat:
        step = 1.0
    elif y == y_hat:
        step = 0.5
    else:
        step = 0.0
    leading = y ** (k - 1.25) * math.exp(-0.5 * y) * step
    corr = (-2.0 * y ** -0.25 * y_hat ** (k - 1.5) * math.sin(omega * math.sqrt(y_hat))
            / (math.pi * omega)
            * (math.cos(omega * math.sqrt(y)) + math.sin(omega * math.sqrt(y))))
    scale = y ** (k - 1.25) * math.exp(-0.5 * y)  # envelope of the leading term
    flagged = abs(corr) > flag_threshold * max(scale, 1e-300)
    return leading + corr, flagged
