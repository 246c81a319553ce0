import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from apstat.trig import TrigPolynomial

amp = st.floats(-2, 2, allow_nan=False)
freq = st.floats(0.1, 10, allow_nan=False)
phase = st.floats(0, 2 * math.pi, allow_nan=False)
polys = st.builds(TrigPolynomial, st.floats(-3, 3, allow_nan=False),
                  st.lists(st.tuples(amp, freq, phase), max_size=3).map(tuple))


def test_rejects_nonpositive_frequency():
    with pytest.raises(ValueError):
        TrigPolynomial(0.0, ((1.0, 0.0, 0.0),))


@settings(max_examples=50, deadline=None)
@given(polys)
def test_sup_bounded_by_amplitude_sum(mu):
    t = np.linspace(-50, 50, 5001)
    assert np.max(np.abs(mu(t))) <= mu.sup_bound() + 1e-12


@settings(max_examples=30, deadline=None)
@given(polys, st.floats(-5, 5))
def test_antiderivative_matches_quadrature(mu, t):
    ref, _ = integrate.quad(lambda s: float(mu(s)), 0.0, t, epsabs=1e-12, limit=200)
    assert mu.antiderivative(t) == pytest.approx(ref, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(polys)
def test_oscillation_bound(mu):
    t = np.linspace(-30, 30, 3001)
    osc = mu.antiderivative(t) - mu.c0 * t
    assert np.ptp(osc) <= mu.oscillation_bound() + 1e-12


def test_mean_is_constant_term():
    mu = TrigPolynomial(-0.7, ((0.3, 1.0, 0.2), (0.5, math.sqrt(2), 1.0)))
    T = 1e5
    avg = (mu.antiderivative(T) - mu.antiderivative(-T)) / (2 * T)
    assert mu.mean() == -0.7
    assert avg == pytest.approx(-0.7, abs=1e-4)


@settings(max_examples=30, deadline=None)
@given(polys, st.floats(0, 20))
def test_displacement_bound_dominates(mu, tau):
    t = np.linspace(0, 60, 6001)
    assert np.max(np.abs(mu(t + tau) - mu(t))) <= mu.displacement_bound(tau) + 1e-12


def test_periods():
    mu = TrigPolynomial(0.0, ((1.0, 1.0, 0.0), (1.0, 1.5, 0.0)))
    assert mu.shortest_period() == pytest.approx(2 * math.pi / 1.5)
    assert mu.longest_period() == pytest.approx(2 * math.pi)
    assert mu.beat_period() == pytest.approx(4 * math.pi)


def test_mean_lag_product_orthogonality():
    u = TrigPolynomial(0.0, ((1.0, 1.0, 0.0), (1.0, math.sqrt(2), 0.0)))
    s = np.array([0.0, 0.4, 1.3])
    np.testing.assert_allclose(u.mean_lag_product(s), 0.5 * (np.cos(s) + np.cos(math.sqrt(2) * s)))
    # direct long time average as an independent check
    t = np.linspace(0, 4000, 800001)
    for si in s:
        avg = np.trapezoid(u(t) * u(t + si), t) / t[-1]
        assert avg == pytest.approx(u.mean_lag_product(si), abs=2e-3)


def test_mean_window_T0():
    mu = TrigPolynomial(-1.0, ((0.5, 1.0, 0.0),))
    T0 = mu.mean_window_T0(0.5)
    xs = np.linspace(0, 2 * math.pi, 400)
    for T in np.linspace(T0, 5 * T0, 50):
        avg = (mu.antiderivative(xs + T) - mu.antiderivative(xs)) / T
        assert avg.max() < -0.5 + 1e-9
    assert TrigPolynomial.constant(-2.0).mean_window_T0() == 0.0
