"""European option math used by the detector.

Covers the Black-Scholes d1/d2 pair, prices and deltas, the transform
that maps an observed delta back to its quantile (recovering d1), and the
first-order approximation tying quantile increments to log returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DataInputError,
    DomainBoundsError,
    ExpiredContractError,
    InsufficientDataError,
)
from .gaussian import std_normal_cdf, std_normal_quantile

VALID_KINDS = ("call", "put")

#: Default sampling interval for the drift term: one day on a 360-day year.
DEFAULT_STEP_YEARS = 1.0 / 360.0

DRIFT_MODES = ("per_step", "unit_step")


@dataclass(frozen=True)
class OptionSpec:
    """Contract-level constants of a European option.

    Attributes:
        kind: "call" or "put".
        strike: exercise price, positive.
        expiry: total time to expiry T in years, positive.
        rate: continuously compounded risk-free rate.
        implied_vol: annualized volatility, positive.
    """

    kind: str
    strike: float
    expiry: float
    rate: float
    implied_vol: float

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ValueError(f"kind must be one of {VALID_KINDS}, got {self.kind!r}")
        if not (self.strike > 0.0 and math.isfinite(self.strike)):
            raise ValueError(f"strike must be positive, got {self.strike!r}")
        if not (self.expiry > 0.0 and math.isfinite(self.expiry)):
            raise ValueError(f"expiry must be positive, got {self.expiry!r}")
        if not math.isfinite(self.rate):
            raise ValueError(f"rate must be finite, got {self.rate!r}")
        if not (self.implied_vol > 0.0 and math.isfinite(self.implied_vol)):
            raise ValueError(f"implied_vol must be positive, got {self.implied_vol!r}")


@dataclass(frozen=True)
class DeltaObservation:
    """One observed option delta at time t (years from the series origin)."""

    t: float
    delta: float
    underlying_price: float | None = None


def time_to_expiry(spec: OptionSpec, t: float) -> float:
    """Remaining life T - t; raises once the contract has expired."""
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"t must be finite and nonnegative, got {t!r}")
    if t >= spec.expiry:
        raise ExpiredContractError(f"t={t} is at or past expiry T={spec.expiry}")
    return spec.expiry - t


def d1(price: float, spec: OptionSpec, t: float) -> float:
    """Standardized log-moneyness drift term of the Black-Scholes formula."""
    if not (price > 0.0 and math.isfinite(price)):
        raise ValueError(f"underlying price must be positive, got {price!r}")
    tau = time_to_expiry(spec, t)
    vol_sqrt = spec.implied_vol * math.sqrt(tau)
    drift = (spec.rate + 0.5 * spec.implied_vol ** 2) * tau
    return (math.log(price / spec.strike) + drift) / vol_sqrt


def d2(price: float, spec: OptionSpec, t: float) -> float:
    tau = time_to_expiry(spec, t)
    return d1(price, spec, t) - spec.implied_vol * math.sqrt(tau)


def price(underlying: float, spec: OptionSpec, t: float) -> float:
    """Black-Scholes value; puts priced through put-call parity."""
    tau = time_to_expiry(spec, t)
    x1 = d1(underlying, spec, t)
    x2 = x1 - spec.implied_vol * math.sqrt(tau)
    discounted_strike = spec.strike * math.exp(-spec.rate * tau)
    call = underlying * std_normal_cdf(x1) - discounted_strike * std_normal_cdf(x2)
    if spec.kind == "call":
        return call
    return call - underlying + discounted_strike


def delta(underlying: float, spec: OptionSpec, t: float) -> float:
    """Option delta: Phi(d1) for calls, Phi(d1) - 1 for puts."""
    x1 = d1(underlying, spec, t)
    if spec.kind == "call":
        return std_normal_cdf(x1)
    return std_normal_cdf(x1) - 1.0


def q_transform(delta_value: float, kind: str) -> float:
    """Map an observed delta back to its quantile, recovering d1.

    Call deltas must lie strictly in (0, 1) and put deltas strictly in
    (-1, 0); values at the bounds carry no quantile information.
    """
    if kind not in VALID_KINDS:
        raise ValueError(f"kind must be one of {VALID_KINDS}, got {kind!r}")
    if kind == "call":
        if not 0.0 < delta_value < 1.0:
            raise DomainBoundsError(
                f"call delta must lie strictly inside (0, 1), got {delta_value!r}")
        return std_normal_quantile(delta_value)
    if not -1.0 < delta_value < 0.0:
        raise DomainBoundsError(
            f"put delta must lie strictly inside (-1, 0), got {delta_value!r}")
    return std_normal_quantile(delta_value + 1.0)


def delta_q_series(observations: Sequence[DeltaObservation], kind: str) -> np.ndarray:
    """First differences of the quantile series of the given observations.

    Observation times must be strictly increasing; the result has one entry
    fewer than the input.
    """
    if len(observations) < 2:
        raise InsufficientDataError(
            f"need at least 2 observations, got {len(observations)}")
    times = [obs.t for obs in observations]
    for earlier, later in zip(times, times[1:]):
        if not later > earlier:
            raise DataInputError(
                f"observation times must be strictly increasing, got {earlier} then {later}")
    q = np.array([q_transform(obs.delta, kind) for obs in observations])
    return np.diff(q)


def approx_delta_d1(delta_r: float, rate: float, sigma: float,
                    tau: float, step: float = DEFAULT_STEP_YEARS,
                    drift_mode: str = "per_step") -> float:
    """First-order change of d1 implied by one log return.

    Approximates the d1 increment as (delta_r - (rate + sigma^2/2) * h)
    / (sigma * sqrt(tau)), dropping a remainder that shrinks as tau grows.
    With ``drift_mode="per_step"`` the drift is weighted by the sampling
    interval ``step`` in years; ``"unit_step"`` uses a weight of one, which
    overstates the drift for intraday data but matches the convention of
    counting time in whole steps.
    """
    if drift_mode not in DRIFT_MODES:
        raise ValueError(f"drift_mode must be one of {DRIFT_MODES}, got {drift_mode!r}")
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    if not (tau > 0.0 and math.isfinite(tau)):
        raise ExpiredContractError(f"time to expiry must be positive, got {tau!r}")
    if drift_mode == "per_step":
        if not (step > 0.0 and math.isfinite(step)):
            raise ValueError(f"step must be positive, got {step!r}")
        h = step
    else:
        h = 1.0
    return (delta_r - (rate + 0.5 * sigma * sigma) * h) / (sigma * math.sqrt(tau))
