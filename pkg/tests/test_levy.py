import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from apstat.errors import HypothesisError, UnboundedTailError
from apstat.kernels import ConstantKernel, ExpKernel, IndicatorKernel, OUKernel
from apstat.levy import (JumpMeasure, LevyDensity, LevyTriplet, MultiTriplet, RepresentationFn, b_space_value,
                         eval_exponent, eval_integral_exponent, exponent_vec, in_domain, rajput_rosinski,
                         rajput_rosinski_terms, rajput_rosinski_vec, triplet_transform)
from apstat.trig import TrigPolynomial

BM = LevyTriplet.gaussian(1.0)


def atoms(*pairs):
    return JumpMeasure(tuple(pairs))


def test_gaussian_exponent():
    assert eval_exponent(BM, 2.0) == pytest.approx(-2.0 + 0j)


def test_single_atom_exponent():
    t = LevyTriplet(0.0, 0.0, atoms((1.0, 3.0)))
    assert eval_exponent(t, math.pi) == pytest.approx(-6 - 3j * math.pi, abs=1e-12)


def test_mixed_atoms_against_direct_sum():
    t = LevyTriplet(0.5, 0.2, atoms((-2.0, 0.3), (0.5, 1.0)))
    z = 1.0
    ref = 1j * 0.2 * z - 0.5 * 0.5 * z * z
    ref += 0.3 * (cmath.exp(-2j * z) - 1)
    ref += 1.0 * (cmath.exp(0.5j * z) - 1 - 0.5j * z)
    assert eval_exponent(t, z) == pytest.approx(ref, abs=1e-14)
    assert exponent_vec(t, [z])[0] == pytest.approx(ref, abs=1e-14)


def test_integral_exponent_closed_forms():
    r = eval_integral_exponent(IndicatorKernel(0, 1), [0.0], BM, [1.0])
    assert r.value == pytest.approx(-0.5, abs=1e-10)
    r = eval_integral_exponent(ExpKernel(1.0), [0.0], BM, [1.0])
    assert r.value == pytest.approx(-0.25, abs=1e-9)


def test_integral_exponent_compound_poisson():
    # gamma = 1 cancels the compensator of the unit atom
    t = LevyTriplet(0.0, 1.0, atoms((1.0, 1.0)))
    re, _ = integrate.quad(lambda s: math.cos(math.exp(-s)) - 1, 0, np.inf, epsabs=1e-12, limit=400)
    im, _ = integrate.quad(lambda s: math.sin(math.exp(-s)), 0, np.inf, epsabs=1e-12, limit=400)
    r = eval_integral_exponent(ExpKernel(1.0), [0.0], t, [1.0])
    assert r.value == pytest.approx(complex(re, im), abs=1e-8)


def test_integral_exponent_refuses_undecaying_kernel():
    with pytest.raises(UnboundedTailError):
        eval_integral_exponent(ConstantKernel(1.0), [0.0], BM, [1.0])


def test_rajput_rosinski_examples():
    assert rajput_rosinski(LevyTriplet(1.0, 0.5), 2.0) == pytest.approx(5.0)
    assert rajput_rosinski(LevyTriplet(0.7, 0.3, atoms((2.0, 1.0))), 0.0) == 0.0
    terms = rajput_rosinski_terms(LevyTriplet(0.0, 0.0, atoms((2.0, 1.0))), 0.25)
    assert terms["U"] == pytest.approx(0.5)
    assert terms["V"] == pytest.approx(0.25)
    assert rajput_rosinski(LevyTriplet(0.0, 0.0, atoms((2.0, 1.0))), 0.25) == pytest.approx(0.75)


def test_domain_examples():
    r = in_domain(IndicatorKernel(0, 1), BM)
    assert r.status == "admissible" and r.integral == pytest.approx(1.0)
    assert in_domain(ConstantKernel(1.0), BM).status == "indeterminate"
    r = in_domain(OUKernel(TrigPolynomial.constant(-1.0)), BM)
    assert r.status == "admissible" and r.integral == pytest.approx(0.5, rel=1e-8)


def test_b_space_examples():
    assert b_space_value(IndicatorKernel(0, 1), LevyTriplet(0, 0, atoms((0.5, 1.0))), sup_over_t=False) == 0.0
    two = LevyTriplet(0, 0, atoms((2.0, 1.0)))
    assert b_space_value(IndicatorKernel(0, 1), two, sup_over_t=False) == pytest.approx(1.0, rel=1e-9)
    assert b_space_value(ExpKernel(1.0), two, sup_over_t=False) == pytest.approx(1 + math.log(2), rel=1e-7)


def test_triplet_transform_examples():
    mt = MultiTriplet(np.eye(2), np.array([0.1, -0.2]))
    tr = triplet_transform(mt)
    np.testing.assert_array_equal(tr.gauss_plus, np.eye(2))
    assert tr.cubed_masses.size == 0
    np.testing.assert_array_equal(tr.gamma_c, [0.1, -0.2])

    tr = triplet_transform(MultiTriplet(np.zeros((1, 1)), np.zeros(1), (([0.5], 2.0),)))
    assert tr.gauss_plus[0, 0] == pytest.approx(0.5)
    assert tr.cubed_masses[0] == pytest.approx(0.25)

    tr = triplet_transform(MultiTriplet(np.array([[0.3]]), np.zeros(1), (([3.0], 1.0),), RepresentationFn(1, 2)))
    assert tr.gauss_plus[0, 0] == pytest.approx(0.3)
    assert tr.cubed_masses[0] == pytest.approx(1.0)


def test_measure_validation():
    with pytest.raises(ValueError):
        JumpMeasure(((0.0, 1.0),))
    with pytest.raises(ValueError):
        JumpMeasure(((1.0, -1.0),))
    with pytest.raises(ValueError):
        LevyTriplet(-1.0)
    with pytest.raises(ValueError):
        MultiTriplet(np.array([[1.0, 2.0], [2.0, 1.0]]), np.zeros(2))


def test_moments_of_compound_poisson():
    t = LevyTriplet(0.5, 0.1, atoms((2.0, 0.5), (-0.5, 1.0)))
    assert t.variance == pytest.approx(0.5 + 4 * 0.5 + 0.25)
    assert t.mean == pytest.approx(0.1 + 1.0)


def test_density_matches_atoms_in_the_limit():
    # a narrow bump around 1.5 of total mass 1 behaves like an atom
    x = np.linspace(1.45, 1.55, 201)
    pos = np.full_like(x, 10.0)
    d = LevyDensity(tuple(x), tuple(pos), tuple(np.zeros_like(x)))
    assert d.mass() == pytest.approx(1.0, rel=1e-6)
    t_d = LevyTriplet(0, 0, JumpMeasure((), d))
    t_a = LevyTriplet(0, 0, atoms((1.5, 1.0)))
    assert eval_exponent(t_d, 0.7) == pytest.approx(eval_exponent(t_a, 0.7), abs=5e-4)


triplets = st.builds(
    lambda a, g, locs: LevyTriplet(a, g, JumpMeasure(tuple((x, m) for x, m in locs))),
    st.floats(0, 2), st.floats(-1, 1),
    st.lists(st.tuples(st.floats(0.05, 4), st.floats(0.1, 2)), max_size=3, unique_by=lambda p: p[0]))


@settings(max_examples=60, deadline=None)
@given(triplets, st.floats(-10, 10))
def test_exponent_properties(t, z):
    v = eval_exponent(t, z)
    assert v.real <= 1e-12
    assert eval_exponent(t, -z) == pytest.approx(v.conjugate(), abs=1e-12)
    k1, k2 = t.growth_constants()
    assert abs(v) <= k1 * abs(z) + k2 * z * z + 1e-12
    assert rajput_rosinski(t, z) <= k1 * abs(z) + k2 * z * z + 1e-12


@settings(max_examples=40, deadline=None)
@given(triplets, st.lists(st.floats(-5, 5), min_size=1, max_size=5))
def test_vectorized_forms_agree(t, zs):
    np.testing.assert_allclose(exponent_vec(t, zs), [eval_exponent(t, z) for z in zs], atol=1e-12)
    np.testing.assert_allclose(rajput_rosinski_vec(t, zs), [rajput_rosinski(t, z) for z in zs], atol=1e-12)


def test_dilation_requires_bounded_away_from_zero():
    from apstat.kernels import DilateKernel
    with pytest.raises(HypothesisError):
        DilateKernel(TrigPolynomial(0.5, ((0.5, 1.0, 0.0),)), ExpKernel(1.0))
