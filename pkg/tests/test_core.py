import math

import numpy as np
import pytest

from seirwave.core import (
    CompartmentState,
    FitParameters,
    FixedRates,
    LogisticR0Params,
    PopulationConfig,
    RectangleR0Params,
    beds_at,
    derivatives,
    r0_logistic,
    r0_rectangle,
    stable_logistic,
)
from seirwave.fitting import TABLE_I_FITTED as T


def table_waves():
    return ((T["a1"], T["b1"]), (T["a2"], T["b2"]))


# -- stable logistic --

@pytest.mark.parametrize("x", [-800.0, -709.5, -30.0, -1.0, 0.0, 1.0, 30.0, 709.5, 800.0])
def test_logistic_matches_reference(x):
    ref = 1.0 / (1.0 + math.exp(-x)) if x > -700 else 0.0
    assert stable_logistic(x) == pytest.approx(ref, rel=1e-15, abs=1e-300)


def test_logistic_saturates_without_overflow():
    assert stable_logistic(1e308) == 1.0
    assert stable_logistic(-1e308) == 0.0
    assert stable_logistic(0.0) == 0.5


# -- rectangle R0 --

def test_rectangle_midpoint_is_exact_average():
    p = RectangleR0Params(2.1347, 0.4597, 2.0634, ((60.45, 146.8),))
    assert r0_rectangle(60.45, p) == (2.1347 + 0.4597) / 2
    assert r0_rectangle(60.45 + 146.8, p) == pytest.approx((2.1347 + 0.4597) / 2, rel=1e-12)


def test_rectangle_far_outside_is_baseline():
    p = RectangleR0Params(2.1347, 0.4597, 2.0634, ((60.45, 146.8),))
    assert r0_rectangle(0.0, p) == 0.4597


def test_two_waves_sum_literally():
    p = RectangleR0Params(T["r0_start"], T["r0_end"], T["k"], table_waves())
    t = T["a1"] + T["b1"] / 2
    # wave 1 saturated high, wave 2 saturated low
    assert r0_rectangle(t, p) == pytest.approx(T["r0_start"] + T["r0_end"], rel=1e-14)
    assert r0_rectangle(0.0, p) == pytest.approx(2 * T["r0_end"], rel=1e-14)


def test_rectangle_vectorised_matches_scalar():
    p = RectangleR0Params(3.0, 0.5, 0.01, table_waves())
    t = np.linspace(-50, 600, 37)
    assert np.array_equal(r0_rectangle(t, p), [r0_rectangle(x, p) for x in t])


def test_rectangle_rejects_bad_shape():
    with pytest.raises(ValueError):
        RectangleR0Params(2.0, 0.5, 0.0)
    with pytest.raises(ValueError):
        RectangleR0Params(2.0, 0.5, 1.0, ((10.0, 0.0),))
    with pytest.raises(ValueError):
        RectangleR0Params(2.0, 0.5, 1.0, ())


# -- logistic R0 --

def test_logistic_r0_oracle():
    p = LogisticR0Params(3.0, 1.0, 1.0, 0.0)
    assert r0_logistic(1.0, p) == pytest.approx(1.0 + 2.0 / (1.0 + math.e), rel=1e-14)
    assert r0_logistic(1.0, p) == pytest.approx(1.53788, abs=1e-5)


def test_logistic_r0_midpoint_and_tails():
    p = LogisticR0Params(3.0, 1.0, 1.0, 40.0)
    assert r0_logistic(40.0, p) == 2.0
    assert r0_logistic(40.0 - 1000.0, p) == pytest.approx(3.0, abs=1e-12)
    assert r0_logistic(1e6, p) == 1.0


# -- beds --

def test_beds_growth():
    pop = PopulationConfig(1e6, beds_0=100.0)
    assert beds_at(0.0, pop, 0.01) == 100.0
    assert beds_at(100.0, pop, 0.01) == pytest.approx(200.0)
    assert beds_at(50.0, PopulationConfig(1e6, beds_0=0.0), 0.01) == 0.0


def test_default_beds_scale_with_population():
    assert PopulationConfig(1.38e9).beds_0 == pytest.approx(69000.0)


# -- derivatives --

def _fit(r0s, r0e, pic=0.0, pcd=0.0, s=0.0, waves=((0.0, 1e4),), k=1.0):
    return FitParameters(RectangleR0Params(r0s, r0e, k, waves), pic, pcd, s)


def test_derivatives_hand_substitution():
    # beta = 0.5 everywhere: r0 = 4.5 flat, gamma = 1/9
    fit = _fit(4.5, 4.5)
    rates = FixedRates(sigma=0.2, gamma=1 / 9, rsus=0.0)
    pop = PopulationConfig(1000.0)
    y = CompartmentState(999.0, 0.0, 1.0, 0.0, 0.0, 0.0)
    d = derivatives(10.0, y, fit, rates, pop)
    assert d.beta == pytest.approx(0.5, rel=1e-15)
    assert d.ds == pytest.approx(-0.4995, rel=1e-14)
    assert d.de == pytest.approx(0.4995, rel=1e-14)
    assert d.di == pytest.approx(-1 / 9, rel=1e-14)
    assert d.dr == pytest.approx(1 / 9, rel=1e-14)
    assert d.dc == 0.0 and d.dd == 0.0


def test_derivatives_bed_overflow_terms():
    # C above capacity: the excess dies at rate 1 per day
    fit = _fit(0.0, 0.0, pic=0.0, pcd=0.5)
    rates = FixedRates(rsus=0.0)
    pop = PopulationConfig(1e6, beds_0=100.0)
    y = CompartmentState(1e6 - 300.0, 0.0, 0.0, 300.0, 0.0, 0.0)
    d = derivatives(0.0, y, fit, rates, pop)
    assert d.dd == pytest.approx(0.5 / 7.5 * 100 + 200)
    assert d.dr == pytest.approx(0.5 / 6.5 * 100)
    assert d.dc == pytest.approx(-(0.5 / 7.5 * 100 + 200 + 0.5 / 6.5 * 100))


def test_disease_free_equilibrium():
    d = derivatives(3.0, CompartmentState(1e6, 0, 0, 0, 0, 0), _fit(3.0, 0.5), FixedRates(),
                    PopulationConfig(1e6))
    assert d.compartments() == (0.0,) * 6


def test_reinfection_returns_share_of_recovery_flow():
    fit = _fit(0.0, 0.0)
    rates = FixedRates(rsus=0.01)
    y = CompartmentState(900.0, 0.0, 100.0, 0.0, 0.0, 0.0)
    d = derivatives(0.0, y, fit, rates, PopulationConfig(1000.0))
    assert d.drec == pytest.approx(100 / 9)
    assert d.ds == pytest.approx(0.01 * d.drec)
    assert d.dr == pytest.approx(0.99 * d.drec)


def test_vaccination_is_clamped_to_susceptibles():
    fit = _fit(0.0, 0.0)
    rates = FixedRates(rsus=0.0)
    pop = PopulationConfig(1000.0)
    d = derivatives(0.0, CompartmentState(5.0, 0, 0, 0, 995.0, 0), fit, rates, pop, v_rate=50.0)
    assert d.ds == -5.0 and d.dr == 5.0
    d = derivatives(0.0, CompartmentState(0.0, 0, 0, 0, 1000.0, 0), fit, rates, pop, v_rate=50.0)
    assert d.ds == 0.0 and d.dr == 0.0


def test_derivatives_reject_bad_input():
    fit = _fit(1.0, 1.0)
    y = CompartmentState(1.0, 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        derivatives(float("nan"), y, fit, FixedRates(), PopulationConfig(1.0))
    with pytest.raises(ValueError):
        derivatives(0.0, y, fit, FixedRates(), PopulationConfig(1.0), v_rate=-1.0)
    with pytest.raises(ValueError):
        CompartmentState(float("inf"), 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        PopulationConfig(0.0)


def test_fixed_rates_validation():
    with pytest.raises(ValueError):
        FixedRates(rsus=1.5)
    with pytest.raises(ValueError):
        FixedRates(sigma=0.0)
    with pytest.raises(ValueError):
        FitParameters(RectangleR0Params(2.0, 0.5, 1.0), 1.2, 0.5, 0.0)
