"""Standard normal distribution function and its inverse.

These two functions are the only special functions the package needs, so
they live here with documented accuracy instead of pulling in a wider
dependency surface.  The distribution function wraps ``math.erfc`` (good to
a couple of ulp over the whole real line); the quantile uses a rational
approximation refined by one Newton step against the erfc-based forward
map, which lands within about 1e-15 relative error on (0, 1).
"""

from __future__ import annotations

import math

from .errors import DomainBoundsError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    """P(Z <= x) for standard normal Z."""
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_pdf(x: float) -> float:
    """Density of the standard normal at x."""
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


# Rational approximation coefficients (central and tail regions).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _quantile_seed(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def _lower_half_quantile(p: float) -> float:
    x = _quantile_seed(p)
    # One Newton step against the forward map removes the seed's ~1e-9 error.
    # For p <= 0.5 the subtraction below is between two small same-scale
    # numbers, so no significant cancellation occurs.
    err = std_normal_cdf(x) - p
    x -= err / std_normal_pdf(x)
    return x


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1).

    Raises:
        DomainBoundsError: if p is not strictly between 0 and 1 (NaN
            included, since it fails both comparisons).
    """
    if not 0.0 < p < 1.0:
        raise DomainBoundsError(f"probability must lie strictly inside (0, 1), got {p!r}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        # 1 - p is exact here (Sterbenz), and solving in the lower tail
        # avoids the cancellation of cdf(x) - p between values near one.
        return -_lower_half_quantile(1.0 - p)
    return _lower_half_quantile(p)
