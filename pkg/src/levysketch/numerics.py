"""Special functions and bracketed monotone root finding.

Everything in this module is a pure function of its arguments.  The error
function and its inverse are implemented from scratch (Maclaurin series plus
a complementary continued fraction, and a rational quantile approximation
refined by Newton steps) so that no platform special-function library sits
on this code path.  The regularized incomplete gamma ratios are delegated
to scipy, which implements the standard Temme/continued-fraction algorithms;
tests check them against direct quadrature and series summation.

All computation is 64-bit binary floating point.  Results therefore carry a
small additive error (a few ulps, amplified modestly by root finding); the
samplers built on top document this as an additive sampling error far below
anything observable at realistic sample sizes, rather than as a failure mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from scipy.special import gammainc as _scipy_gammainc
from scipy.special import gammaincc as _scipy_gammaincc

__all__ = [
    "Tolerance",
    "DEFAULT_TOLERANCE",
    "BracketError",
    "NoConvergenceError",
    "erf",
    "erfc",
    "inv_erf",
    "regularized_gamma_q",
    "poisson_tail",
    "solve_monotone_increasing",
]


class BracketError(ValueError):
    """The supplied bracket does not enclose the target value."""


class NoConvergenceError(RuntimeError):
    """Root finding failed to meet tolerance within the iteration cap."""


@dataclass(frozen=True)
class Tolerance:
    """Accuracy contract for iterative numerics.

    rel and abs bound the acceptable residual / bracket width, max_iter caps
    the number of function evaluations a solver may spend.
    """

    rel: float = 1e-12
    abs: float = 1e-15
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not (self.rel > 0):
            raise ValueError(f"rel must be positive, got {self.rel}")
        if not (self.abs > 0):
            raise ValueError(f"abs must be positive, got {self.abs}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_TOLERANCE = Tolerance()

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_SQRT_PI_OVER_TWO = math.sqrt(math.pi) / 2.0


def erf(x: float) -> float:
    """Gauss error function, (2/sqrt(pi)) * integral of exp(-t^2) from 0 to x."""
    if x < 0.0:
        return -erf(-x)
    if x <= 2.0:
        # Maclaurin series; at x = 2 the largest term is ~2.4 so cancellation
        # costs at most a few ulps.
        term = x
        total = x
        n = 0
        xx = x * x
        while True:
            n += 1
            term *= -xx / n
            contrib = term / (2 * n + 1)
            total += contrib
            if abs(contrib) < 1e-18 * abs(total) + 5e-324:
                return _TWO_OVER_SQRT_PI * total
    return 1.0 - erfc(x)


def erfc(x: float) -> float:
    """Complementary error function, 1 - erf(x)."""
    if x < 2.0:
        return 1.0 - erf(x)
    if x > 27.0:
        return 0.0  # below the smallest positive double
    # Continued fraction sqrt(pi) exp(x^2) erfc(x) = 1/(x+ (1/2)/(x+ 1/(x+ ...)))
    # evaluated with modified Lentz.
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    n = 0
    while n < 300:
        n += 1
        a = 1.0 if n == 1 else (n - 1) / 2.0
        d = x + a * d
        if d == 0.0:
            d = tiny
        c = x + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-x * x) * f / math.sqrt(math.pi)


# Acklam's rational approximation to the standard normal quantile,
# relative error below 1.15e-9 everywhere on (0, 1).
_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02,
             -2.759285104469687e+02, 1.383577518672690e+02,
             -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02,
             -1.556989798598866e+02, 6.680131188771972e+01,
             -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01,
             -2.400758277161838e+00, -2.549732539343734e+00,
             4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01,
             2.445134137142996e+00, 3.754408661907416e+00)


def _norm_quantile(p: float) -> float:
    """Approximate inverse standard normal CDF (used as a starting point)."""
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q
                 + c[5])
                / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    if p > 1.0 - p_low:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q
                  + c[5])
                 / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r
             + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r
               + 1.0))


def inv_erf(b: float) -> float:
    """Inverse error function on (0, 1): the y >= 0 with erf(y) = b.

    A rational starting approximation is polished with Newton steps against
    the series/continued-fraction erf above, so accuracy is limited only by
    double precision.
    """
    if not (0.0 < b < 1.0):
        raise ValueError(f"inv_erf requires 0 < b < 1, got {b}")
    # Starting point from Acklam's normal-quantile approximation, written in
    # terms of b so that probabilities near 1 keep their full precision
    # ((1+b)/2 would round to 1.0 for b within 2^-52 of 1).
    a, bb, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    if b <= 0.9515:  # central region of the quantile, p = (1+b)/2 <= 0.97575
        q = b / 2.0
        r = q * q
        z = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r
              + a[5]) * q
             / (((((bb[0] * r + bb[1]) * r + bb[2]) * r + bb[3]) * r + bb[4])
                * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log((1.0 - b) / 2.0))
        z = -((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q
               + c[5])
              / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0))
    y = z / math.sqrt(2.0)
    if y < 0.0:
        y = 0.0
    one_minus_b = 1.0 - b  # exact for b >= 0.5
    for _ in range(8):
        # erf(y) - b, written to avoid cancellation when b is close to 1
        if b > 0.9:
            resid = erfc(y) - one_minus_b
            step = -resid * _SQRT_PI_OVER_TWO * math.exp(y * y)
        else:
            resid = erf(y) - b
            step = resid * _SQRT_PI_OVER_TWO * math.exp(y * y)
        y -= step
        if abs(step) <= 1e-15 * abs(y) + 1e-300:
            break
    return y


def regularized_gamma_q(s: float, a: float) -> float:
    """Upper regularized incomplete gamma Q(s, a) = P(Gamma(s, 1) >= a).

    Increasing in s for fixed a > 0, decreasing in a for fixed s.
    """
    if not (s > 0.0):
        raise ValueError(f"shape must be positive, got {s}")
    if a < 0.0:
        raise ValueError(f"lower limit must be non-negative, got {a}")
    return float(_scipy_gammaincc(s, a))


def poisson_tail(k: int, w: float) -> float:
    """P(Poisson(w) >= k) for k >= 1, via the regularized lower incomplete
    gamma identity P(Poisson(w) >= k) = P(k, w).  Increasing in w.

    The gamma route avoids truncating the defining series.
    """
    if k < 1:
        raise ValueError(f"count threshold must be >= 1, got {k}")
    if w < 0.0:
        raise ValueError(f"rate must be non-negative, got {w}")
    return float(_scipy_gammainc(k, w))


def solve_monotone_increasing(
    f: Callable[[float], float],
    target: float,
    bracket: tuple[float, float],
    tol: Tolerance = DEFAULT_TOLERANCE,
    df: Optional[Callable[[float], float]] = None,
    x0: Optional[float] = None,
) -> float:
    """Solve f(w) = target for a nondecreasing f on the bracket.

    Maintains a hard bracket at all times, so the result is always inside it.
    Between bisection steps the next probe comes from a Newton step when df
    is given, otherwise from an Illinois-damped secant; any probe that falls
    outside the open bracket is replaced by the midpoint.  Stops when the
    residual or the bracket width meets the tolerance.
    """
    lo, hi = bracket
    if not (lo <= hi):
        raise BracketError(f"invalid bracket ({lo}, {hi})")
    flo = f(lo)
    fhi = f(hi)
    if flo > target:
        raise BracketError(f"f(lo) = {flo} exceeds target {target}")
    if fhi < target:
        raise BracketError(f"f(hi) = {fhi} is below target {target}")

    resid_tol = max(tol.abs, tol.rel * abs(target))
    # Illinois bookkeeping: which endpoint survived the previous update.
    last_side = 0

    if x0 is not None and lo < x0 < hi:
        x = x0
    elif fhi > flo:
        x = lo + (target - flo) * (hi - lo) / (fhi - flo)
        if not (lo < x < hi):
            x = 0.5 * (lo + hi)
    else:
        x = 0.5 * (lo + hi)

    for _ in range(tol.max_iter):
        fx = f(x)
        if abs(fx - target) <= resid_tol:
            return x
        if fx < target:
            lo, flo = x, fx
            if last_side == -1:
                fhi = 0.5 * (fhi - target) + target  # Illinois damping
            last_side = -1
        else:
            hi, fhi = x, fx
            if last_side == +1:
                flo = 0.5 * (flo - target) + target
            last_side = +1
        if hi - lo <= tol.abs + tol.rel * abs(x):
            return 0.5 * (lo + hi)
        if df is not None:
            slope = df(x)
            x_next = x - (fx - target) / slope if slope > 0.0 else math.inf
        else:
            denom = fhi - flo
            x_next = lo + (target - flo) * (hi - lo) / denom if denom > 0.0 else math.inf
        if not (lo < x_next < hi):
            x_next = 0.5 * (lo + hi)
        x = x_next
    raise NoConvergenceError(
        f"no convergence to {target} within {tol.max_iter} iterations; "
        f"bracket ({lo}, {hi})"
    )
