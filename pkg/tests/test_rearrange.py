import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apstat.kernels import ExpKernel, IndicatorKernel, OUKernel, combine
from apstat.rearrange import (DistFn, dist_fn, layer_cake_norm, level_difference_integral, tail_functional,
                              weighted_l1_distance)
from apstat.trig import TrigPolynomial

IND2 = IndicatorKernel(0.0, 2.0).section(0)
IND1 = IndicatorKernel(0.0, 1.0).section(0)
EXP = ExpKernel(1.0).section(0)
ZERO = IndicatorKernel(0.0, 1.0, 0.0).section(0)


def test_distribution_function_examples():
    d = dist_fn(IND2)
    np.testing.assert_allclose(d([0.5, 1.5]), [2.0, 0.0])
    a = np.array([0.01, 0.3, 0.9])
    np.testing.assert_allclose(dist_fn(EXP)(a), -np.log(a), rtol=1e-10)
    ou = OUKernel(TrigPolynomial.constant(-1.0)).section(0.0)
    assert dist_fn(ou)(np.array([math.exp(-3)]))[0] == pytest.approx(3.0, rel=1e-9)


def test_layer_cake_examples():
    assert layer_cake_norm(dist_fn(IND2), 1) == pytest.approx(2.0, rel=1e-9)
    assert layer_cake_norm(dist_fn(EXP), 2) == pytest.approx(math.sqrt(0.5), rel=1e-7)
    assert layer_cake_norm(dist_fn(ZERO), 2) == 0.0


def test_tail_functional_examples():
    assert tail_functional(dist_fn(IND1), 2) == pytest.approx(0.5, rel=1e-9)
    assert tail_functional(dist_fn(EXP), 2) == pytest.approx((1 + math.log(2)) / 2, rel=1e-7)
    assert tail_functional(dist_fn(ZERO), 5) == 0.0
    with pytest.raises(ValueError):
        tail_functional(dist_fn(EXP), 0.5)


def test_weighted_distance_examples():
    d1 = dist_fn(IND1)
    assert level_difference_integral(d1, d1, 1) == 0.0
    res = weighted_l1_distance(d1, dist_fn(IND2), 1, IND1, IND2)
    assert res.distance == pytest.approx(1.0, rel=1e-9)
    assert res.bound == pytest.approx(2.0, rel=1e-9)
    assert res.holds
    two = IndicatorKernel(0.0, 1.0, 2.0).section(0)
    assert level_difference_integral(d1, dist_fn(two), 2) == pytest.approx(1.5, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 4), st.floats(0.2, 4))
def test_distribution_function_non_increasing(rate, h):
    sec = combine([(h, ExpKernel(rate).section(0)), (1.0, IND1)])
    a = np.linspace(1e-3, h + 1.5, 200)
    v = dist_fn(sec)(a)
    assert np.all(np.diff(v) <= 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.01, 0.99))
def test_scaling(c, a):
    d = dist_fn(EXP)
    dc = dist_fn(EXP.affine(c, 0.0))
    assert dc(np.array([a]))[0] == pytest.approx(d(np.array([a]))[0] / c, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 3), st.floats(0.3, 3), st.sampled_from([1.0, 2.0]))
def test_weighted_distance_below_rearrangement_bound(r1, r2, p):
    f = ExpKernel(r1).section(0)
    g = combine([(1.0, ExpKernel(r2, 0.2).section(0)), (0.5, IND1)])
    res = weighted_l1_distance(dist_fn(f), dist_fn(g), p, f, g)
    assert res.holds


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 3), st.floats(0.3, 3))
def test_sum_bound_on_tail(r1, r2):
    # {|f+g| > a} lies inside {|f| > a/2} union {|g| > a/2}
    f, g = ExpKernel(r1).section(0), ExpKernel(r2, 0.5).section(0)
    a = np.linspace(0.05, 1.5, 40)
    lhs = dist_fn(combine([(1.0, f), (1.0, g)]))(a)
    assert np.all(lhs <= dist_fn(f)(a / 2) + dist_fn(g)(a / 2) + 1e-10)


def test_layer_cake_matches_direct_norm_for_ou():
    sec = OUKernel(TrigPolynomial(-1.0, ((0.4, 3.0, 0.0),))).section(0.2)
    for p in (1, 2):
        assert layer_cake_norm(dist_fn(sec), p) == pytest.approx(sec.lp_norm(p), rel=1e-6)


def test_csv_roundtrip(tmp_path):
    d = dist_fn(EXP)
    d.to_csv(tmp_path / "d.csv")
    back = DistFn.from_csv(tmp_path / "d.csv")
    np.testing.assert_allclose(back.values, d.values)
