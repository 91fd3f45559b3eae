"""Special-function kernel: generalized Laguerre sequences, log-gamma,
upper incomplete gamma, and the generalized hypergeometric series 2F2.

Everything here is a pure function of its inputs.  The 2F2 series is summed
in compensated (double-double) arithmetic because its terms grow to ~1e27
before cancelling down to O(1e-4) results in the regimes this package needs;
plain float64 summation loses the answer entirely there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LaguerreSequence",
    "SeriesConvergenceError",
    "laguerre_sequence",
    "log_gamma",
    "upper_incomplete_gamma",
    "hyp2f2",
    "hyp2f2_sequence",
]


class SeriesConvergenceError(RuntimeError):
    """Raised when a series fails to converge within its term cap."""


# ---------------------------------------------------------------------------
# double-double arithmetic (Dekker/Knuth error-free transforms)
#
# All helpers accept floats or numpy arrays.  A double-double value is a pair
# (hi, lo) with hi + lo representing the value to ~31 significant digits.
# ---------------------------------------------------------------------------

_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _two_prod(a, b):
    p = a * b
    aa = _SPLIT * a
    ahi = aa - (aa - a)
    alo = a - ahi
    bb = _SPLIT * b
    bhi = bb - (bb - b)
    blo = b - bhi
    return p, ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


def _dd_add(xh, xl, yh, yl):
    sh, e = _two_sum(xh, yh)
    e = e + (xl + yl)
    return _two_sum(sh, e)


def _dd_mul(xh, xl, yh, yl):
    ph, pl = _two_prod(xh, yh)
    pl = pl + (xh * yl + xl * yh)
    return _two_sum(ph, pl)


def _dd_div(xh, xl, yh, yl):
    q0 = xh / yh
    rh, rl = _dd_mul(q0, np.zeros_like(q0) if isinstance(q0, np.ndarray) else 0.0, yh, yl)
    sh, sl = _dd_add(xh, xl, -rh, -rl)
    return _two_sum(q0, (sh + sl) / yh)


# ---------------------------------------------------------------------------
# generalized Laguerre polynomials
# ---------------------------------------------------------------------------

# Rescale the recurrence pair whenever the running magnitude passes 2**±512;
# keeps the upward recurrence exact while |L_n| can reach e^{x/2}-type growth.
_SCALE_HI = 2.0**512
_SCALE_LO = 2.0**-512


@dataclass
class LaguerreSequence:
    """Values L_0^(alpha)(x) .. L_{count-1}^(alpha)(x).

    ``values`` holds plain float64 entries; entries whose true magnitude
    exceeds the double range are saturated to +/-inf and flagged in
    ``overflowed``.  ``mantissas``/``exponents`` carry the exact scaled
    representation value = mantissa * 2**exponent for log-space consumers.
    """

    alpha: float
    count: int
    argument: float
    values: np.ndarray
    mantissas: np.ndarray
    exponents: np.ndarray
    overflowed: np.ndarray = field(repr=False)

    @property
    def any_overflow(self) -> bool:
        return bool(self.overflowed.any())

    def log_abs(self) -> np.ndarray:
        """log|L_n(x)| computed from the scaled representation."""
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.mantissas)) + self.exponents * math.log(2.0)

    def signs(self) -> np.ndarray:
        return np.sign(self.mantissas)


def _laguerre_scaled(alpha: float, count: int, x: np.ndarray):
    """Upward three-term recurrence with a carried power-of-two exponent.

    ``x`` is a 1-d array; returns (mantissas, exponents) of shape
    (count, len(x)).
    """
    npts = x.shape[0]
    man = np.zeros((count, npts))
    exp2 = np.zeros((count, npts), dtype=np.int64)
    prev = np.ones(npts)
    man[0] = prev
    if count == 1:
        return man, exp2
    cur = alpha + 1.0 - x
    e = np.zeros(npts, dtype=np.int64)
    man[1] = cur
    exp2[1] = e
    for n in range(1, count - 1):
        nxt = ((2 * n + alpha + 1 - x) * cur - (n + alpha) * prev) / (n + 1)
        prev, cur = cur, nxt
        big = np.abs(cur) > _SCALE_HI
        if big.any():
            cur = np.where(big, cur * _SCALE_LO, cur)
            prev = np.where(big, prev * _SCALE_LO, prev)
            e = e + np.where(big, 512, 0)
        man[n + 1] = cur
        exp2[n + 1] = e
    return man, exp2


def laguerre_sequence(alpha: float, count: int, x: float) -> LaguerreSequence:
    """All L_n^(alpha)(x) for n < count by upward recurrence.

    Requires alpha > -1, count >= 1 and x >= 0.
    """
    if not alpha > -1.0:
        raise ValueError(f"laguerre_sequence: alpha must be > -1, got {alpha}")
    if count < 1:
        raise ValueError(f"laguerre_sequence: count must be >= 1, got {count}")
    if x < 0.0:
        raise ValueError(f"laguerre_sequence: argument must be >= 0, got {x}")
    man, exp2 = _laguerre_scaled(alpha, count, np.array([float(x)]))
    man = man[:, 0]
    exp2 = exp2[:, 0]
    with np.errstate(over="ignore"):
        values = np.ldexp(man, exp2.astype(np.int32, copy=False))
    overflowed = ~np.isfinite(values)
    return LaguerreSequence(
        alpha=float(alpha),
        count=int(count),
        argument=float(x),
        values=values,
        mantissas=man,
        exponents=exp2,
        overflowed=overflowed,
    )


def laguerre_table(alpha: float, count: int, x: np.ndarray):
    """Scaled Laguerre values for a vector of arguments.

    Returns (mantissas, exponents), each of shape (count, len(x)).  Used by
    the spectral layer to evaluate whole basis columns at once.
    """
    x = np.asarray(x, dtype=float)
    if not alpha > -1.0:
        raise ValueError(f"laguerre_table: alpha must be > -1, got {alpha}")
    if count < 1:
        raise ValueError(f"laguerre_table: count must be >= 1, got {count}")
    if np.any(x < 0):
        raise ValueError("laguerre_table: arguments must be >= 0")
    return _laguerre_scaled(alpha, count, x)


# ---------------------------------------------------------------------------
# gamma-family helpers
# ---------------------------------------------------------------------------

def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    if not x > 0.0:
        raise ValueError(f"log_gamma: requires x > 0, got {x}")
    return math.lgamma(x)


def upper_incomplete_gamma(s: float, x: float) -> float:
    """Gamma(s, x) = integral_x^inf t^(s-1) e^-t dt for s > 0, x >= 0."""
    if not s > 0.0:
        raise ValueError(f"upper_incomplete_gamma: requires s > 0, got {s}")
    if x < 0.0:
        raise ValueError(f"upper_incomplete_gamma: requires x >= 0, got {x}")
    from scipy.special import gammaincc

    # regularized Q(s,x) times Gamma(s); s stays small in this package so the
    # unregularized product does not overflow
    return float(gammaincc(s, x)) * math.exp(math.lgamma(s))


# ---------------------------------------------------------------------------
# generalized hypergeometric 2F2
# ---------------------------------------------------------------------------

_TERM_TOL = 1e-16
_CONSECUTIVE_BELOW = 50
_DEFAULT_TERM_CAP = 20000


def _check_lower_params(b1: float, b2: float) -> None:
    for b in (b1, b2):
        if b <= 0.0 and b == math.floor(b):
            raise ValueError(f"hyp2f2: lower parameter {b} is a nonpositive integer")


def hyp2f2(a1: float, a2: float, b1: float, b2: float, z: float,
           term_cap: int = _DEFAULT_TERM_CAP) -> float:
    """Sum of the 2F2(a1, a2; b1, b2; z) defining series, real z.

    The series is summed term by term in double-double arithmetic and stops
    once the running term stays below 1e-16 of the partial sum for 50
    consecutive terms.  Raises SeriesConvergenceError past ``term_cap``.
    """
    _check_lower_params(b1, b2)
    out = hyp2f2_sequence(np.array([float(a1)]), a2, b1, b2, z, term_cap=term_cap)
    return float(out[0])


def hyp2f2_sequence(a1: np.ndarray, a2: float, b1: float, b2: float, z: float,
                    term_cap: int = _DEFAULT_TERM_CAP) -> np.ndarray:
    """2F2 for a vector of first parameters, shared (a2, b1, b2, z).

    The spectral layer evaluates one series per basis order with only the
    first upper parameter varying, so the whole vector is swept in lockstep.
    """
    _check_lower_params(b1, b2)
    a1 = np.asarray(a1, dtype=float)
    z = float(z)
    th = np.ones_like(a1)
    tl = np.zeros_like(a1)
    sh = np.ones_like(a1)
    sl = np.zeros_like(a1)
    below = 0
    for p in range(term_cap):
        fp = float(p)
        n1h, n1l = _two_sum(a1, fp)
        n2h, n2l = _two_sum(a2, fp)
        nh, nl = _dd_mul(n1h, n1l, n2h, n2l)
        nh, nl = _dd_mul(nh, nl, z, 0.0)
        d1h, d1l = _two_sum(b1, fp)
        d2h, d2l = _two_sum(b2, fp)
        dh, dl = _dd_mul(d1h, d1l, d2h, d2l)
        dh, dl = _dd_mul(dh, dl, fp + 1.0, 0.0)
        rh, rl = _dd_div(nh, nl, dh, dl)
        th, tl = _dd_mul(th, tl, rh, rl)
        sh, sl = _dd_add(sh, sl, th, tl)
        if np.all(np.abs(th) <= _TERM_TOL * np.abs(sh)):
            below += 1
            if below >= _CONSECUTIVE_BELOW:
                return sh + sl
        else:
            below = 0
    raise SeriesConvergenceError(
        f"hyp2f2: series did not converge within {term_cap} terms "
        f"(a2={a2}, b1={b1}, b2={b2}, z={z})"
    )
