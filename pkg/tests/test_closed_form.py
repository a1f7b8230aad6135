import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from gravent.closed_form import (
    ClosedFormResult,
    UnsupportedRegimeError,
    entanglement_oscillator_large_omegaT,
    entanglement_oscillator_limit,
    entanglement_path_limit,
    entanglement_unified,
    entanglement_unified_dimensional,
    f0,
    f2,
    f4,
    f_functions,
    relativistic_correction,
)
from gravent.params import DimensionlessGroups, ExperimentParams, RegimeWarning, derive_groups

mpmath.mp.dps = 60


def oracle(x):
    """The f-functions in their exp(x^2/2) form at 60 digits."""
    x = mpmath.mpf(x)
    x2 = x * x
    e2, e4 = mpmath.exp(x2 / 2), mpmath.exp(x2 / 4)
    den = (e4 + 1) ** 2
    a0 = (-x2 * x2 - 4 * x2 + 4 * e2 - 2 * e4 * (x2 * x2 + 2 * x2 - 4) + 4) / (4 * den)
    a2 = (-12 * x2 + 8 * e2 + (-3 * x2 * x2 - 12 * x2 + 16) * e4 + 8) / (8 * den)
    a4 = (-x2 / 2 + e4 + 1) ** 2 / den
    return float(a0), float(a2), float(a4)


def test_f_at_zero():
    assert f_functions(0.0) == (1.0, 1.0, 1.0)


def test_f4_at_two():
    e = math.e
    assert f4(2.0) == pytest.approx((e - 1) ** 2 / (e + 1) ** 2, abs=1e-12)
    assert f4(2.0) == pytest.approx(0.21355, abs=1e-5)


@pytest.mark.parametrize("x", [38.0, 50.0, 200.0, 1e4])
def test_f_large_argument_no_overflow(x):
    for v in f_functions(x):
        assert abs(v - 1) < 1e-6


@pytest.mark.parametrize("x", [0.0, 1e-4, 0.3, 1.0, 2.0, 2.2, 3.5, 5.0, 8.0, 12.0, 20.0, 30.0, 50.0])
def test_f_against_high_precision(x):
    for got, want in zip(f_functions(x), oracle(x)):
        assert got == pytest.approx(want, rel=1e-13, abs=1e-14)


@given(st.floats(0, 60))
def test_f_against_high_precision_random(x):
    for got, want in zip(f_functions(x), oracle(x)):
        assert got == pytest.approx(want, rel=1e-12, abs=1e-13)


def test_f_bounded_on_grid():
    xs = np.linspace(0, 50, 50001)
    a0, a2, a4 = f_functions(xs)
    assert np.all(np.isfinite(a0 + a2 + a4))
    # f0 and f2 dip below zero around x = 3; f4 stays positive
    assert a0.min() == pytest.approx(-3.5556, abs=1e-3)
    assert a2.min() == pytest.approx(-2.9511, abs=1e-3)
    assert a4.min() == pytest.approx(0.19631, abs=1e-4)
    assert max(a0.max(), a2.max(), a4.max()) <= 1.0 + 1e-12


@given(st.floats(0, 60), st.floats(1e-3, 100))
def test_bracket_positive(xi, wt):
    g = DimensionlessGroups(1.0, 0.01, xi, 0.0, wt)
    assert entanglement_unified(g).value > 0


def test_f_vectorized_matches_scalar():
    xs = np.array([0.0, 1.0, 4.0])
    for f in (f0, f2, f4):
        assert np.array_equal(f(xs), np.array([f(float(x)) for x in xs]))


def test_negative_x_rejected():
    for f in (f0, f2, f4):
        with pytest.raises(ValueError):
            f(-0.1)


def test_unified_reference_value():
    g = DimensionlessGroups(phi=1.0, epsilon=0.01, xi=0.0, omegaT=1.0)
    e = entanglement_unified(g)
    assert e.formula == "unified"
    assert e.value == pytest.approx(2e-4 * math.sqrt(13 / 9), rel=1e-14)
    assert e.value == pytest.approx(2.404e-4, rel=1e-3)


def test_unified_path_regime():
    g = DimensionlessGroups(phi=10.0, epsilon=0.01 / 30, xi=30.0, omegaT=0.1)
    assert entanglement_path_limit(g).value == pytest.approx(1e-4, rel=1e-12)
    assert entanglement_unified(g).value == pytest.approx(1e-4, rel=5e-3)


@given(st.floats(20, 200), st.floats(0.01, 0.5))
def test_unified_to_path_limit_rate(xi, wt):
    g = DimensionlessGroups(1e-3, 1e-4, xi, 0.0, wt)
    err = abs(entanglement_unified(g).value / entanglement_path_limit(g).value - 1)
    assert err <= 4 / xi**2 * (1 + wt**2)


@given(st.floats(0.01, 30))
def test_unified_equals_oscillator_at_xi_zero(wt):
    g = DimensionlessGroups(0.3, 0.01, 0.0, 0.0, wt)
    assert entanglement_unified(g).value == pytest.approx(entanglement_oscillator_limit(g).value, rel=1e-15)


def test_path_limit_examples():
    assert entanglement_path_limit(DimensionlessGroups(1.0, 0.01, 0.0)).value == 0.0
    a = entanglement_path_limit(DimensionlessGroups(1.0, 0.01, 1.0)).value
    b = entanglement_path_limit(DimensionlessGroups(1.0, 0.01, 2.0)).value
    assert b == pytest.approx(4 * a, rel=1e-15)


def test_oscillator_examples():
    g = DimensionlessGroups(1.0, 1.0, 0.0, 0.0, 3.0)
    assert entanglement_oscillator_limit(g).value == pytest.approx(6 * math.sqrt(13), rel=1e-14)
    g = DimensionlessGroups(1e-3, 0.01, 0.0, 0.0, 1e-6)
    assert entanglement_oscillator_limit(g).value == pytest.approx(2 * g.phi * g.omegaT * g.epsilon**2, rel=1e-12)
    g = DimensionlessGroups(0.1, 0.01, 0.0, 0.0, 10.0)
    assert entanglement_oscillator_large_omegaT(g).value == pytest.approx(2 / 3 * 1e-2, rel=1e-13)
    g = DimensionlessGroups(1.0, 0.01, 0.0, 0.0, 1e4)
    ratio = entanglement_oscillator_limit(g).value / entanglement_oscillator_large_omegaT(g).value
    assert ratio == pytest.approx(1, rel=1e-6)


def test_large_omegaT_cubic_in_T():
    e = [entanglement_oscillator_large_omegaT(DimensionlessGroups(1e-3, 0.01, 0.0, 0.0, t)).value for t in (2.0, 4.0)]
    assert e[1] / e[0] == pytest.approx(8.0, rel=1e-14)


def test_smaller_spread_more_entanglement():
    """At fixed hbar, m, T, d the large-wT result scales as 1/alpha^2."""
    vals = []
    for alpha in (1e-9, 2e-9):
        g = derive_groups(ExperimentParams(m=1e-14, d=2e-4, alpha=alpha, beta=0.0, T=1.0))
        vals.append(entanglement_oscillator_large_omegaT(g).value)
    assert vals[0] / vals[1] == pytest.approx(4.0, rel=1e-12)


@given(st.floats(0, 40), st.floats(0.01, 50), st.floats(1e-6, 1e3))
def test_linear_in_phi(xi, wt, phi):
    g1 = DimensionlessGroups(phi, 0.01, xi, 0.0, wt)
    g2 = DimensionlessGroups(2 * phi, 0.01, xi, 0.0, wt)
    assert entanglement_unified(g2).value == pytest.approx(2 * entanglement_unified(g1).value, rel=1e-15)


@pytest.mark.parametrize("xi,wt", [(0.0, 1.0), (1.0, 0.5), (5.0, 2.0), (30.0, 0.1)])
def test_dimensionless_matches_dimensional(xi, wt):
    G, m, hbar, d, alpha = 1.3, 0.7, 1.1, 40.0, 0.4
    omega = hbar / (m * alpha**2)
    T = wt / omega
    g = derive_groups(ExperimentParams(m=m, d=d, alpha=alpha, beta=xi * alpha, T=T, G=G, hbar=hbar, c=1.0))
    dim = entanglement_unified_dimensional(G, m, hbar, d, alpha, xi * alpha, T)
    assert entanglement_unified(g).value == pytest.approx(dim, rel=1e-12)


def test_si_scale_no_underflow():
    p = ExperimentParams(m=1e-14, d=2e-4, alpha=1e-12, beta=5e-12, T=1e-3)
    e = entanglement_unified(derive_groups(p)).value
    assert math.isfinite(e) and e > 0


def test_relativistic_sign_change_and_asymptote():
    def delta(wt, which="general"):
        return getattr(relativistic_correction(DimensionlessGroups(1e-3, 0.01, 0.0, 0.01, wt)), which).correction

    assert delta(math.sqrt(3)) == pytest.approx(0.0, abs=1e-22)
    assert delta(1.0) > 0 and delta(2.0) < 0 and delta(50.0) < 0
    assert delta(100.0) / delta(100.0, "large_omegaT") == pytest.approx(1.0, rel=1e-2)


def test_relativistic_fields():
    r = relativistic_correction(DimensionlessGroups(1e-3, 0.01, 0.0, 0.01, 3.0))
    for res in (r.general, r.large_omegaT):
        assert res.formula == "relativistic_corrected"
    assert r.general.value == pytest.approx(
        entanglement_oscillator_limit(DimensionlessGroups(1e-3, 0.01, 0.0, 0.01, 3.0)).value + r.general.correction,
        rel=1e-15,
    )


def test_relativistic_refuses_xi():
    with pytest.raises(UnsupportedRegimeError):
        relativistic_correction(DimensionlessGroups(1e-3, 0.01, 1.0, 0.01, 3.0))


def test_relativistic_warns_on_large_omega():
    with pytest.warns(RegimeWarning):
        relativistic_correction(DimensionlessGroups(1e-3, 0.01, 0.0, 0.5, 3.0))


def test_result_tag_validated():
    with pytest.raises(ValueError):
        ClosedFormResult(1.0, "bogus")
