"""Black-Scholes values, deltas, and the delta-to-quantile transform.

The Monte Carlo price below was frozen from a 1e7-path seeded run
(terminal lognormal draw, discounted payoff mean 7.96858, SE 0.00416);
quantile references come from the bisection oracle in test_gaussian.
"""

import math

import numpy as np
import pytest

from optinformed import (
    DEFAULT_STEP_YEARS,
    DataInputError,
    DeltaObservation,
    DomainBoundsError,
    ExpiredContractError,
    InsufficientDataError,
    OptionSpec,
    approx_delta_d1,
    d1,
    d2,
    delta,
    delta_q_series,
    price,
    q_transform,
    time_to_expiry,
)

MC_ATM_CALL = 7.96858  # 1e7 paths, S=E=100, r=0, sigma=0.2, tau=1
MC_ATM_CALL_TOL = 0.01

# direct formula evaluation at S=8650*1.01, E=8650, r=0.01, sigma=0.2087, tau=2/360
D1_WEEKLY_POINT = 0.6510123518818034

DQ_CALL_19_38 = 0.5724155069518314
DQ_PUT_49_27 = 0.5877440827579161

ATM = OptionSpec(kind="call", strike=100.0, expiry=1.0, rate=0.0, implied_vol=0.2)


def test_spec_validation():
    with pytest.raises(ValueError):
        OptionSpec(kind="straddle", strike=100.0, expiry=1.0, rate=0.0, implied_vol=0.2)
    with pytest.raises(ValueError):
        OptionSpec(kind="call", strike=-1.0, expiry=1.0, rate=0.0, implied_vol=0.2)
    with pytest.raises(ValueError):
        OptionSpec(kind="call", strike=100.0, expiry=0.0, rate=0.0, implied_vol=0.2)
    with pytest.raises(ValueError):
        OptionSpec(kind="call", strike=100.0, expiry=1.0, rate=0.0, implied_vol=0.0)


def test_time_to_expiry():
    assert time_to_expiry(ATM, 0.25) == pytest.approx(0.75, rel=1e-15)
    with pytest.raises(ExpiredContractError):
        time_to_expiry(ATM, 1.0)
    with pytest.raises(ValueError):
        time_to_expiry(ATM, -0.1)


def test_d1_atm_zero_rate():
    # ln(S/E)=0 leaves (sigma^2/2)/sigma
    assert d1(100.0, ATM, 0.0) == pytest.approx(0.1, rel=1e-14)


def test_d1_atm_with_rate():
    spec = OptionSpec(kind="call", strike=100.0, expiry=1.0, rate=0.02, implied_vol=0.2)
    assert d1(100.0, spec, 0.0) == pytest.approx(0.2, rel=1e-14)


def test_d1_weekly_point_frozen():
    spec = OptionSpec(kind="call", strike=8650.0, expiry=2.0 / 360.0, rate=0.01,
                      implied_vol=0.2087)
    assert d1(8650.0 * 1.01, spec, 0.0) == pytest.approx(D1_WEEKLY_POINT, abs=1e-12)


def test_d2_offset():
    spec = OptionSpec(kind="call", strike=90.0, expiry=0.5, rate=0.03, implied_vol=0.25)
    x1 = d1(100.0, spec, 0.1)
    tau = 0.4
    assert d2(100.0, spec, 0.1) == pytest.approx(x1 - 0.25 * math.sqrt(tau), rel=1e-14)


def test_price_atm_call_frozen():
    p = price(100.0, ATM, 0.0)
    assert p == pytest.approx(7.965567455405798, abs=1e-10)
    assert abs(p - MC_ATM_CALL) < MC_ATM_CALL_TOL


def test_price_vanishes_with_volatility():
    spec = OptionSpec(kind="call", strike=100.0, expiry=1.0, rate=0.0, implied_vol=1e-8)
    assert price(100.0, spec, 0.0) < 1e-6


def test_price_deep_itm():
    spec = OptionSpec(kind="call", strike=80.0, expiry=0.5, rate=0.0, implied_vol=1e-4)
    assert price(100.0, spec, 0.0) == pytest.approx(20.0, abs=1e-8)


def test_price_lower_bound_and_put_formula():
    from optinformed import std_normal_cdf
    rng = np.random.default_rng(5)
    for _ in range(200):
        s = float(rng.uniform(50.0, 150.0))
        spec = OptionSpec(kind="call", strike=float(rng.uniform(60.0, 140.0)),
                          expiry=float(rng.uniform(0.05, 2.0)),
                          rate=float(rng.uniform(-0.01, 0.05)),
                          implied_vol=float(rng.uniform(0.05, 0.6)))
        tau = spec.expiry
        call = price(s, spec, 0.0)
        disc = spec.strike * math.exp(-spec.rate * tau)
        assert call >= max(s - disc, 0.0) - 1e-10
        put_spec = OptionSpec(kind="put", strike=spec.strike, expiry=spec.expiry,
                              rate=spec.rate, implied_vol=spec.implied_vol)
        # independent route: E e^{-r tau} Phi(-d2) - S Phi(-d1)
        direct = disc * std_normal_cdf(-d2(s, spec, 0.0)) - s * std_normal_cdf(-d1(s, spec, 0.0))
        assert price(s, put_spec, 0.0) == pytest.approx(direct, abs=1e-9)


def test_delta_at_forward_moneyness():
    # S = E*exp(-(r+sigma^2/2)tau) puts d1 exactly at zero
    s = 100.0 * math.exp(-0.02)
    assert delta(s, ATM, 0.0) == pytest.approx(0.5, abs=1e-14)
    put = OptionSpec(kind="put", strike=100.0, expiry=1.0, rate=0.0, implied_vol=0.2)
    assert delta(s, put, 0.0) == pytest.approx(-0.5, abs=1e-14)


def test_delta_atm_spot():
    assert delta(100.0, ATM, 0.0) == pytest.approx(0.539827837277029, abs=1e-14)


def test_put_delta_is_call_delta_minus_one():
    put = OptionSpec(kind="put", strike=100.0, expiry=1.0, rate=0.0, implied_vol=0.2)
    for s in (80.0, 95.0, 100.0, 110.0, 130.0):
        assert delta(s, put, 0.2) == pytest.approx(delta(s, ATM, 0.2) - 1.0, abs=1e-14)


def test_q_transform_center_and_frozen():
    assert q_transform(0.5, "call") == 0.0
    assert q_transform(0.19, "call") == pytest.approx(-0.8778962950512288, abs=1e-12)
    assert q_transform(-0.49, "put") == pytest.approx(0.025068908258710915, abs=1e-12)


def test_q_transform_rejects_bounds():
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(DomainBoundsError):
            q_transform(bad, "call")
    for bad in (0.0, -1.0, 0.4, -1.5):
        with pytest.raises(DomainBoundsError):
            q_transform(bad, "put")


def test_q_transform_recovers_d1_grid():
    rng = np.random.default_rng(17)
    checked = 0
    while checked < 400:
        spec = OptionSpec(kind="call", strike=float(rng.uniform(60.0, 140.0)),
                          expiry=float(rng.uniform(0.05, 2.0)),
                          rate=float(rng.uniform(0.0, 0.05)),
                          implied_vol=float(rng.uniform(0.1, 0.5)))
        s = float(rng.uniform(60.0, 140.0))
        dv = delta(s, spec, 0.0)
        if not 0.01 <= dv <= 0.99:
            continue
        assert q_transform(dv, "call") == pytest.approx(d1(s, spec, 0.0), abs=1e-8)
        checked += 1


def test_q_transform_put_call_same_state():
    for s in (85.0, 100.0, 115.0):
        dv = delta(s, ATM, 0.3)
        assert q_transform(dv - 1.0, "put") == pytest.approx(q_transform(dv, "call"),
                                                             abs=1e-10)


def test_delta_q_series_constant():
    obs = [DeltaObservation(t=0.0, delta=0.5), DeltaObservation(t=0.1, delta=0.5)]
    out = delta_q_series(obs, "call")
    assert out.shape == (1,)
    assert out[0] == 0.0


def test_delta_q_series_frozen_values():
    call_obs = [DeltaObservation(t=0.0, delta=0.19), DeltaObservation(t=0.1, delta=0.38)]
    assert delta_q_series(call_obs, "call")[0] == pytest.approx(DQ_CALL_19_38, abs=1e-10)
    put_obs = [DeltaObservation(t=0.0, delta=-0.49), DeltaObservation(t=0.1, delta=-0.27)]
    assert delta_q_series(put_obs, "put")[0] == pytest.approx(DQ_PUT_49_27, abs=1e-10)


def test_delta_q_series_matches_exact_d1_differences():
    spec = OptionSpec(kind="call", strike=100.0, expiry=0.5, rate=0.01, implied_vol=0.25)
    times = np.linspace(0.0, 0.1, 30)
    prices = 100.0 * np.exp(np.linspace(0.0, 0.04, 30))
    obs = [DeltaObservation(t=float(t), delta=delta(float(s), spec, float(t)))
           for t, s in zip(times, prices)]
    got = delta_q_series(obs, "call")
    want = np.diff([d1(float(s), spec, float(t)) for t, s in zip(times, prices)])
    assert np.max(np.abs(got - want)) < 1e-8


def test_delta_q_series_input_errors():
    with pytest.raises(InsufficientDataError):
        delta_q_series([DeltaObservation(t=0.0, delta=0.5)], "call")
    bad = [DeltaObservation(t=0.1, delta=0.5), DeltaObservation(t=0.1, delta=0.6)]
    with pytest.raises(DataInputError):
        delta_q_series(bad, "call")


def test_approx_delta_d1_examples():
    assert approx_delta_d1(0.0, 0.0, 0.2, 1.0) == pytest.approx(-0.02 / 360.0 / 0.2,
                                                                rel=1e-12)
    cancel = (0.0 + 0.2 ** 2 / 2.0) * DEFAULT_STEP_YEARS
    assert approx_delta_d1(cancel, 0.0, 0.2, 1.0) == 0.0
    with pytest.raises(ExpiredContractError):
        approx_delta_d1(0.01, 0.0, 0.2, 0.0)


def test_approx_delta_d1_unit_step_mode():
    got = approx_delta_d1(0.0, 0.01, 0.2, 1.0, drift_mode="unit_step")
    assert got == pytest.approx(-(0.01 + 0.02) / 0.2, rel=1e-12)


def test_approximation_error_shrinks_with_time_to_expiry():
    # error of the linearized d1 change vs the exact one, fixed move 100 -> 101
    errors = []
    h = DEFAULT_STEP_YEARS
    for tau in (0.5, 1.0, 2.0, 4.0):
        spec = OptionSpec(kind="call", strike=100.0, expiry=tau + h, rate=0.0,
                          implied_vol=0.2)
        exact = d1(101.0, spec, h) - d1(100.0, spec, 0.0)
        approx = approx_delta_d1(math.log(1.01), 0.0, 0.2, tau)
        errors.append(abs(exact - approx))
    assert errors == sorted(errors, reverse=True)
