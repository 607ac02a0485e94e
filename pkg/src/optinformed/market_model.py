"""Structural market model and its ARMA(1,1) reduction.

A hidden AR(1) information process drives informed order volume, an
independent Gaussian noise flow masks it, and log prices move
proportionally to total flow.  Log returns then follow an ARMA(1,1)
process whose coefficients can be reached by two routes: a published
closed form, and an independent solve that matches the lag-0 and lag-1
autocovariances of the simulated returns.  The two routes disagree for
some parameters (notably the sign of the MA coefficient when the
information noise vanishes), so reductions report both together with a
consistency flag rather than silently picking one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    DegenerateMarketError,
    NonstationaryError,
    SingularFormulaError,
)

LAMBDA_VARIANTS = ("text", "theorem")
REDUCTION_METHODS = ("closed_form", "autocovariance_solve")

#: Steps discarded before a simulated path starts, so samples follow the
#: stationary law rather than the (deterministic) start value.
DEFAULT_BURN_IN = 1000

_CONSISTENCY_TOL = 1.0e-8


@dataclass(frozen=True)
class StructuralParams:
    """Parameters of the structural market.

    Attributes:
        psi_bar: level term of the information recursion.
        rho: persistence of the information process, |rho| < 1.
        beta: informed volume per unit of information, positive.
        sigma_z: std of information shocks, nonnegative.
        sigma_u: std of noise volume, nonnegative (formulas that divide by
            it enforce positivity themselves).
        s0: initial underlying price, positive.
        horizon: trading horizon in steps, at least 2.
    """

    psi_bar: float
    rho: float
    beta: float
    sigma_z: float
    sigma_u: float
    s0: float
    horizon: int

    def __post_init__(self):
        if not (math.isfinite(self.rho) and abs(self.rho) < 1.0):
            raise NonstationaryError(f"|rho| < 1 required, got {self.rho!r}")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        if not (self.sigma_z >= 0.0 and math.isfinite(self.sigma_z)):
            raise ValueError(f"sigma_z must be nonnegative, got {self.sigma_z!r}")
        if not (self.sigma_u >= 0.0 and math.isfinite(self.sigma_u)):
            raise ValueError(f"sigma_u must be nonnegative, got {self.sigma_u!r}")
        if not (self.s0 > 0.0 and math.isfinite(self.s0)):
            raise ValueError(f"s0 must be positive, got {self.s0!r}")
        if not (isinstance(self.horizon, int) and self.horizon >= 2):
            raise ValueError(f"horizon must be an integer >= 2, got {self.horizon!r}")
        if not math.isfinite(self.psi_bar):
            raise ValueError(f"psi_bar must be finite, got {self.psi_bar!r}")


@dataclass(frozen=True)
class ArmaParams:
    """ARMA(1,1) coefficients for a return series."""

    gamma: float
    rho: float
    delta: float
    sigma_eps2: float

    def __post_init__(self):
        for name in ("gamma", "rho", "delta", "sigma_eps2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.sigma_eps2 < 0.0:
            raise ValueError(f"sigma_eps2 must be nonnegative, got {self.sigma_eps2!r}")


@dataclass(frozen=True)
class SimulatedMarket:
    """One simulated path.  returns[t] = log_prices[t+1] - log_prices[t]."""

    psi: np.ndarray
    order_flow: np.ndarray
    log_prices: np.ndarray
    returns: np.ndarray
    seed: int
    lam: float


@dataclass(frozen=True)
class ArmaReduction:
    """Both reduction routes side by side.

    ``params`` repeats the route selected by the caller.  ``closed_form``
    is None when the published denominator is zero at these parameters.
    ``consistent`` is None when only one route is available.
    """

    params: ArmaParams
    method: str
    closed_form: ArmaParams | None
    autocov: ArmaParams
    consistent: bool | None


def market_depth_lambda(params: StructuralParams, variant: str = "theorem") -> float:
    """Price-impact coefficient, as published in two inconsistent variants.

    ``"text"`` uses beta*sigma_z^2 / (beta*sigma_z^2 + sigma_u^2);
    ``"theorem"`` multiplies the information term by 4.  Both vanish when
    sigma_z = 0 and are undefined when both noise scales are zero.
    """
    if variant not in LAMBDA_VARIANTS:
        raise ValueError(f"variant must be one of {LAMBDA_VARIANTS}, got {variant!r}")
    info = params.beta * params.sigma_z ** 2
    if variant == "theorem":
        info *= 4.0
    denom = info + params.sigma_u ** 2
    if denom == 0.0:
        raise DegenerateMarketError(
            "both sigma_z and sigma_u are zero; market depth is undefined")
    return info / denom


def simulate(params: StructuralParams, steps: int, seed: int,
             variant: str = "theorem", lambda_override: float | None = None,
             burn_in: int = DEFAULT_BURN_IN) -> SimulatedMarket:
    """Simulate the structural market for a given seed.

    The information process starts at its stationary mean and a burn-in
    (default 1000 steps) is discarded on top of that, so sample moments
    reflect the stationary law.  Paths are bit-reproducible for a fixed
    seed.  ``lambda_override`` bypasses the depth formula, which is the
    only way to obtain moving prices when sigma_z = 0.
    """
    if not (isinstance(steps, int) and steps >= 1):
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    if burn_in < 0:
        raise ValueError(f"burn_in must be nonnegative, got {burn_in!r}")
    if lambda_override is None:
        lam = market_depth_lambda(params, variant)
    else:
        lam = float(lambda_override)
        if not math.isfinite(lam):
            raise ValueError(f"lambda_override must be finite, got {lambda_override!r}")
    rng = np.random.default_rng(seed)
    total = burn_in + steps
    z = rng.normal(0.0, params.sigma_z, total)
    u = rng.normal(0.0, params.sigma_u, total)
    psi_start = params.psi_bar / (1.0 - params.rho)
    psi_full = kernels.ar1_path(z, params.rho, params.psi_bar, psi_start)
    psi = psi_full[burn_in:]
    flow = params.beta * psi + u[burn_in:]
    returns = lam * flow
    log_prices = np.empty(steps + 1)
    log_prices[0] = math.log(params.s0)
    np.cumsum(returns, out=log_prices[1:])
    log_prices[1:] += log_prices[0]
    return SimulatedMarket(psi=psi, order_flow=flow, log_prices=log_prices,
                           returns=returns, seed=seed, lam=lam)


def gamma_from_structural(params: StructuralParams, s_terminal: float,
                          variant: str = "theorem") -> float:
    """Intercept of the return process given the terminal price level."""
    if not (s_terminal > 0.0 and math.isfinite(s_terminal)):
        raise ValueError(f"s_terminal must be positive, got {s_terminal!r}")
    lam = market_depth_lambda(params, variant)
    drift = math.log(s_terminal) - math.log(params.s0)
    return lam * params.beta * (1.0 - params.rho) * drift / params.horizon


def theoretical_autocovariance(arma: ArmaParams, lag: int) -> float:
    """Stationary autocovariance of an ARMA(1,1) process at lag 0 or 1."""
    if abs(arma.rho) >= 1.0:
        raise NonstationaryError(f"|rho| < 1 required, got {arma.rho!r}")
    if lag == 0:
        num = 1.0 + arma.delta ** 2 + 2.0 * arma.rho * arma.delta
    elif lag == 1:
        num = (arma.rho + arma.rho * arma.delta ** 2
               + arma.rho ** 2 * arma.delta + arma.delta)
    else:
        raise ValueError(f"lag must be 0 or 1, got {lag!r}")
    return arma.sigma_eps2 * num / (1.0 - arma.rho ** 2)


def _invertible_root(a: float, b: float) -> float:
    """Root with |root| <= 1 of a*x^2 + b*x + a = 0 (roots are reciprocal)."""
    if abs(a) < 1.0e-14 * max(1.0, abs(b)):
        return 0.0
    disc = b * b - 4.0 * a * a
    if disc < 0.0:
        raise SingularFormulaError(
            "autocovariance pair is not reachable by an invertible ARMA(1,1)")
    root = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(root, b))
    first = q / a
    second = a / q if q != 0.0 else first
    cand = first if abs(first) <= abs(second) else second
    # Guard against a hair over 1 from rounding when the roots sit on the
    # unit circle.
    if abs(cand) > 1.0:
        if abs(cand) > 1.0 + 1.0e-9:
            raise SingularFormulaError(
                "no root with magnitude at most 1 for the autocovariance quadratic")
        cand = math.copysign(1.0, cand)
    return cand


def _reduction_autocov(params: StructuralParams, lam: float) -> tuple[float, float]:
    """MA coefficient and innovation variance matching the simulated returns.

    Matches the exact lag-0/lag-1 autocovariances of the return process,
        V0 = lam^2 * (b2z / (1 - rho^2) + sigma_u^2)
        V1 = lam^2 * rho * b2z / (1 - rho^2)
    with b2z = beta^2 sigma_z^2, against their ARMA(1,1) counterparts, and
    solves the resulting quadratic for the MA coefficient.  The lam^2
    factor cancels in the ratio, so the MA root is well defined even when
    the depth coefficient is zero.
    """
    rho = params.rho
    b2z = (params.beta * params.sigma_z) ** 2
    core = b2z / (1.0 - rho ** 2)
    v0_unit = core + params.sigma_u ** 2   # V0 / lam^2
    v1_unit = rho * core                   # V1 / lam^2
    k = v1_unit / v0_unit
    a = rho - k
    b = 1.0 + rho ** 2 - 2.0 * rho * k
    delta = _invertible_root(a, b)
    shape = 1.0 + delta ** 2 + 2.0 * rho * delta
    sigma_eps2 = lam ** 2 * v0_unit * (1.0 - rho ** 2) / shape
    return delta, sigma_eps2


def _reduction_closed_form(params: StructuralParams, lam: float) -> tuple[float, float]:
    """Published closed form for the MA coefficient and innovation variance.

    Kept verbatim, including its behavior at sigma_z = 0 where it returns
    the opposite MA sign from the autocovariance solve.
    """
    rho = params.rho
    su2 = params.sigma_u ** 2
    b2z = (params.beta * params.sigma_z) ** 2
    denom = 2.0 * rho * su2 - 2.0 * b2z
    scale = max(su2, b2z, 1.0e-300)
    if abs(denom) < 1.0e-14 * scale:
        raise SingularFormulaError(
            "closed-form denominator 2*rho*sigma_u^2 - 2*beta^2*sigma_z^2 is zero")
    root = math.sqrt(4.0 * b2z + su2 * (1.0 - rho) ** 2)
    delta = (su2 * (1.0 + rho ** 2) + 2.0 * b2z
             - (1.0 + rho) * params.sigma_u * root) / denom
    var_denom = rho * delta ** 2 + rho ** 2 * delta + rho + delta
    if var_denom == 0.0:
        raise SingularFormulaError(
            "innovation-variance denominator is zero at the closed-form MA root")
    sigma_eps2 = lam ** 2 * b2z * (1.0 + rho ** 2) / var_denom
    return delta, sigma_eps2


def arma_from_structural(params: StructuralParams,
                         method: str = "autocovariance_solve",
                         variant: str = "theorem",
                         s_terminal: float | None = None) -> ArmaReduction:
    """Reduce structural parameters to ARMA(1,1) coefficients.

    Runs both routes whenever the closed form is nonsingular and flags
    disagreement beyond 1e-8.  The intercept needs the terminal price
    level; without ``s_terminal`` it is reported as 0.

    Raises:
        DegenerateMarketError: if sigma_u is zero (both routes divide by a
            quantity that vanishes with it).
        SingularFormulaError: if ``method="closed_form"`` is requested at
            parameters where its denominator is zero.
    """
    if method not in REDUCTION_METHODS:
        raise ValueError(f"method must be one of {REDUCTION_METHODS}, got {method!r}")
    if params.sigma_u <= 0.0:
        raise DegenerateMarketError("sigma_u must be positive for the reduction")
    lam = market_depth_lambda(params, variant)
    gamma = 0.0
    if s_terminal is not None:
        gamma = gamma_from_structural(params, s_terminal, variant)

    delta_ac, var_ac = _reduction_autocov(params, lam)
    autocov = ArmaParams(gamma=gamma, rho=params.rho, delta=delta_ac,
                         sigma_eps2=var_ac)

    closed: ArmaParams | None
    try:
        delta_cf, var_cf = _reduction_closed_form(params, lam)
        closed = ArmaParams(gamma=gamma, rho=params.rho, delta=delta_cf,
                            sigma_eps2=max(var_cf, 0.0))
    except SingularFormulaError:
        if method == "closed_form":
            raise
        closed = None

    if closed is None:
        consistent = None
    else:
        var_scale = max(1.0, abs(autocov.sigma_eps2))
        consistent = (abs(closed.delta - autocov.delta) <= _CONSISTENCY_TOL
                      and abs(closed.sigma_eps2 - autocov.sigma_eps2)
                      <= _CONSISTENCY_TOL * var_scale)

    chosen = closed if method == "closed_form" else autocov
    assert chosen is not None
    return ArmaReduction(params=chosen, method=method, closed_form=closed,
                         autocov=autocov, consistent=consistent)


def simulate_arma11(arma: ArmaParams, steps: int, seed: int,
                    burn_in: int = DEFAULT_BURN_IN) -> np.ndarray:
    """Simulate an ARMA(1,1) series directly; useful for estimator checks."""
    if abs(arma.rho) >= 1.0:
        raise NonstationaryError(f"|rho| < 1 required, got {arma.rho!r}")
    if not (isinstance(steps, int) and steps >= 1):
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, math.sqrt(arma.sigma_eps2), burn_in + steps)
    x_start = arma.gamma / (1.0 - arma.rho)
    path = kernels.arma11_path(eps, arma.gamma, arma.rho, arma.delta, x_start, 0.0)
    return path[burn_in:]
