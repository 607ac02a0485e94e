"""ARMA(1,1) estimation by conditional sum of squares, plus rolling windows.

The estimator minimizes the conditional sum of squared one-step errors
under the recursion eps[t] = x[t] - gamma - rho*x[t-1] - delta*eps[t-1]
with eps initialized at zero, using a bounded quasi-Newton search
restarted from several scattered points.  The AR coefficient is kept
strictly inside the unit interval; the MA coefficient may reach the
non-invertibility boundary at magnitude one, and boundary or
near-cancelling fits are flagged rather than suppressed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    ConfigError,
    DataInputError,
    DegenerateDataError,
    InsufficientDataError,
)
from .market_model import ArmaParams

#: Shortest series the estimator accepts.
MIN_FIT_LENGTH = 20

#: |rho + delta| below this marks the fit as weakly identified: the AR and
#: MA roots nearly cancel and their individual signs carry little meaning.
WEAK_IDENTIFICATION_TOL = 0.1

_GTOL = 1.0e-7
_MAXITER = 60


@dataclass(frozen=True)
class ArmaFit:
    """One estimated window.

    Attributes:
        params: point estimates, with sigma_eps2 = objective / len(residuals).
        residuals: one-step errors at the optimum, one shorter than the data.
        objective: minimized conditional sum of squares.
        converged: whether the best start met the gradient tolerance.
        window_start: index of the window's first observation in the parent
            series (0 for a direct fit).
        weak_identification: near root cancellation, |rho + delta| < 0.1.
    """

    params: ArmaParams
    residuals: np.ndarray
    objective: float
    converged: bool
    window_start: int = 0
    weak_identification: bool = False


def _as_series(series, min_length: int) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise DataInputError(f"series must be one-dimensional, got shape {x.shape}")
    if x.shape[0] < min_length:
        raise InsufficientDataError(
            f"need at least {min_length} observations, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise DataInputError(f"non-finite value at index {bad}")
    return x


def sample_autocovariance(series, lag: int) -> float:
    """Sample autocovariance at the given lag, averaging the N - lag
    available products."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.shape[0] == 0:
        raise DataInputError("series must be a nonempty one-dimensional array")
    if not np.all(np.isfinite(x)):
        raise DataInputError("series contains non-finite values")
    n = x.shape[0]
    if not 0 <= lag < n:
        raise ValueError(f"lag must satisfy 0 <= lag < {n}, got {lag!r}")
    c = x - x.mean()
    if lag == 0:
        return float(c @ c) / n
    return float(c[lag:] @ c[:-lag]) / (n - lag)


def fit_arma11(series, *, window_start: int = 0) -> ArmaFit:
    """Fit ARMA(1,1) with intercept to a series of at least 20 points.

    Raises:
        DegenerateDataError: for a constant series.
        DataInputError: for non-finite values.
    """
    x = _as_series(series, MIN_FIT_LENGTH)
    if np.ptp(x) == 0.0:
        raise DegenerateDataError("series is constant; nothing to fit")
    gamma, rho, delta, sse, converged = kernels.fit_css(x, _GTOL, _MAXITER)
    residuals = kernels.arma_residuals(x, gamma, rho, delta)
    params = ArmaParams(gamma=gamma, rho=rho, delta=delta,
                        sigma_eps2=sse / residuals.shape[0])
    return ArmaFit(params=params, residuals=residuals, objective=sse,
                   converged=bool(converged), window_start=window_start,
                   weak_identification=abs(rho + delta) < WEAK_IDENTIFICATION_TOL)


def rolling_fit(series, window: int) -> list[ArmaFit]:
    """Independent fits over every span of window+1 consecutive points.

    Fit k covers observations [k, k + window] of the series, for
    k = 0 .. len(series) - window - 1.  Windows move one observation at a
    time and share no state, so the result equals calling
    :func:`fit_arma11` on each non-constant slice.

    A window with zero variance yields an unconverged placeholder fit with
    zero coefficients rather than aborting the sweep (where
    :func:`fit_arma11` on that slice alone would raise).
    """
    if not isinstance(window, int):
        raise ConfigError(f"window must be an integer, got {window!r}")
    if window < MIN_FIT_LENGTH:
        raise ConfigError(
            f"window must be at least {MIN_FIT_LENGTH}, got {window}")
    x = _as_series(series, window)
    n = x.shape[0]
    count = n - window
    if count <= 0:
        return []
    table, conv = kernels.rolling_css(x, window, _GTOL, _MAXITER)
    fits: list[ArmaFit] = []
    for k in range(count):
        gamma, rho, delta, sse = table[k]
        residuals = kernels.arma_residuals(x[k:k + window + 1], gamma, rho, delta)
        params = ArmaParams(gamma=gamma, rho=rho, delta=delta,
                            sigma_eps2=sse / residuals.shape[0])
        fits.append(ArmaFit(
            params=params, residuals=residuals, objective=sse,
            converged=bool(conv[k]), window_start=k,
            weak_identification=abs(rho + delta) < WEAK_IDENTIFICATION_TOL))
    return fits


def ljung_box(residuals, lags: int = 10) -> float:
    """Ljung-Box portmanteau statistic of residual autocorrelation."""
    e = np.asarray(residuals, dtype=float)
    n = e.shape[0]
    if n <= lags:
        raise InsufficientDataError(f"need more than {lags} residuals, got {n}")
    c = e - e.mean()
    denom = float(c @ c)
    if denom == 0.0:
        raise DegenerateDataError("residuals are constant")
    stat = 0.0
    for k in range(1, lags + 1):
        r = float(c[k:] @ c[:-k]) / denom
        stat += r * r / (n - k)
    return n * (n + 2.0) * stat
