import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apstat.aperiodicity import (IntegralProcess, _generic_phi, _PointField, certify_ap, default_tau_step,
                                 displacement_scan, gamma_translation, kernel_shift_distance, marginal_displacement,
                                 max_gap, scan_function, triplet_path_displacement, z_nodes)
from apstat.errors import HypothesisError
from apstat.kernels import ExpKernel, OUKernel, SeparableKernel
from apstat.levy import JumpMeasure, LevyTriplet, MultiTriplet, triplet_transform
from apstat.metrics import CharFnGrid, gamma_metric
from apstat.quad import DEFAULT_QUAD
from apstat.trig import TrigPolynomial

BM = LevyTriplet.gaussian(1.0)
MU_P = TrigPolynomial(-1.0, ((0.5, 2 * math.pi, 0.0),))
MU_Q = TrigPolynomial(0.0, ((1.0, 1.0, 0.0), (1.0, math.sqrt(2), 0.0)))
# recorded from the scan at the default step; the dense oracle below must agree within one step
GOLDEN_QP_GAP = 182.158200464493


def test_max_gap_helper():
    assert max_gap([]) == math.inf and max_gap([3.0]) == math.inf
    assert max_gap([0, 1, 3, 4]) == 2.0


def test_periodic_function_integer_shifts():
    p = scan_function(TrigPolynomial(0.0, ((1.0, 2 * math.pi, 0.0),)), 0.01, (0, 10))
    np.testing.assert_allclose(p.representatives(), np.arange(11), atol=1e-9)
    assert p.max_gap == pytest.approx(1.0)


def test_constant_function():
    p = scan_function(TrigPolynomial.constant(-0.3), 1e-6, (0, 5), tau_step=0.5)
    assert not np.any(p.D)
    assert p.found.size == p.tau_grid.size


def test_quasi_periodic_golden_gap():
    p = scan_function(MU_Q, 0.1, (0, 200))
    assert p.found.size >= 2
    assert p.max_gap == pytest.approx(GOLDEN_QP_GAP, rel=1e-12)
    step = default_tau_step(MU_Q)
    # independent dense scan with one tenth of the step
    taus = np.arange(0, 200 + 1e-9, step / 10)
    t = np.linspace(0, 3 * MU_Q.beat_period(), 2048)
    f = lambda x: np.cos(x) + np.cos(math.sqrt(2) * x)
    D = np.array([np.max(np.abs(f(t + a) - f(t))) for a in taus])
    dense = taus[D < 0.1]
    assert abs(p.max_gap - max_gap(dense)) <= step


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 40), st.integers(0, 40))
def test_translation_set_difference(i, j):
    # differences of eps-almost periods are 2 eps-almost periods
    mu = TrigPolynomial(0.0, ((1.0, 1.0, 0.0), (0.5, 3.0, 0.0)))
    eps = 0.05
    p = scan_function(mu, eps, (0, 2 * math.pi * 40), tau_step=2 * math.pi / 8)
    reps = p.representatives()
    a, b = reps[i % reps.size], reps[j % reps.size]
    t = np.linspace(0, 2 * math.pi, 2048)
    assert np.max(np.abs(mu(t + a - b) - mu(t))) < 2 * eps + 1e-9


def test_kernel_shift_distance_examples():
    k = OUKernel(MU_P)
    t = np.linspace(0, 1, 7)
    assert kernel_shift_distance(k, 0.0, 0.0, 2, t) == 0.0
    # break points of the shifted section agree only to rounding, a sliver the L2 norm square-roots
    assert kernel_shift_distance(k, 1.0, 1.0, 1, t) < 1e-12
    assert kernel_shift_distance(k, 1.0, 1.0, 2, t) < 1e-7


def test_separable_shift_distance_factorises():
    u = TrigPolynomial(1.0, ((0.5, 1.0, 0.0),))
    g = ExpKernel(1.0)
    t = np.linspace(0, 2 * math.pi, 33)
    tau = 0.7
    direct = kernel_shift_distance(SeparableKernel(u, g), tau, 0.0, 2, t)
    factor = np.max(np.abs(u(t) - u(t + tau))) * g.section(0).lp_norm(2)
    assert direct == pytest.approx(factor, abs=1e-8)


def test_marginal_displacement_examples():
    proc = IntegralProcess(OUKernel(TrigPolynomial.constant(-1.0)), LevyTriplet.gaussian(1.0, 0.3))
    t = np.linspace(0, 2, 9)
    assert marginal_displacement(proc, 0.0, t) == 0.0
    assert marginal_displacement(proc, 0.37, t) < 1e-6
    per = IntegralProcess(OUKernel(MU_P), BM)
    assert marginal_displacement(per, 1.0, t, offsets=(0.0, 0.3), k=3) < 1e-6
    assert marginal_displacement(per, 0.5, t, offsets=(0.0, 0.3), k=3) > 1e-3


def test_closed_form_matches_generic_exponent():
    proc = IntegralProcess(OUKernel(MU_P), LevyTriplet.gaussian(0.8, 0.4))
    xs = np.array([0.1, 0.55])
    offsets = np.array([0.0, 0.3])
    z = z_nodes(2, 2.0, 5)
    fast = _PointField(proc.kernel, proc.triplet, xs, offsets).phi(np.arange(2), z)
    slow = _generic_phi(proc, xs, offsets, z, DEFAULT_QUAD)
    np.testing.assert_allclose(fast, slow, atol=1e-10)


def test_half_space_nodes():
    z = z_nodes(2, 1.0, 5)
    full = z_nodes(2, 1.0, 5, half=False)
    assert z.shape[0] == (full.shape[0] + 1) // 2
    assert not any(np.allclose(-a, b) and np.any(a) for a in z for b in z)


def test_displacement_scan_zero_shift():
    proc = IntegralProcess(OUKernel(MU_P), BM)
    taus, D, res = displacement_scan(proc, (0, 2), tau_step=0.25, n_t=256, z_per_axis=16)
    assert taus[0] == 0 and D[0] == 0.0
    np.testing.assert_allclose(D[[4, 8]], 0.0, atol=1e-9)
    assert res["tau_step"] == 0.25


def test_gamma_translation_dominates_direct_metric():
    proc = IntegralProcess(OUKernel(MU_P), LevyTriplet.gaussian(1.0, 0.2))
    kern = proc.kernel
    t0, tau = 0.2, 0.4
    bound = gamma_translation(proc, tau, np.array([t0]), K=8, z_per_axis=128)
    laws = []
    for x in (t0, t0 + tau):
        v = kern.variance_profile(np.array([x]))[0]
        m = 0.2 * kern.mean_profile(np.array([x]))[0]
        laws.append(CharFnGrid.from_function(lambda z, v=v, m=m: np.exp(1j * m * z[:, 0] - 0.5 * v * z[:, 0] ** 2),
                                             1, 8, 128))
    direct = gamma_metric(*laws)
    assert direct.value <= bound + 1e-9
    assert bound <= direct.value + direct.tail_bound + 1e-3


def test_certificate_periodic_ou():
    cert = certify_ap(IntegralProcess(OUKernel(MU_P), BM), [1e-4], (0, 3), tau_step=0.02, offsets=(0.0, 0.3),
                      n_t=512, K=4, gamma_t_points=32, z_per_axis=16)
    s = cert.summary()
    reps = s["levels"][0]["representatives"]
    np.testing.assert_allclose(reps, [0, 1, 2, 3], atol=1e-9)
    assert all(g < 2 ** -3 + 1e-6 for _, g in s["levels"][0]["gamma_bounds"])
    with pytest.raises(HypothesisError):
        certify_ap(IntegralProcess(OUKernel(TrigPolynomial(0.0, ((1.0, 1.0, 0.0),))), BM), [0.1])


def test_triplet_path_displacement():
    a = triplet_transform(MultiTriplet(np.eye(1), np.zeros(1), (([0.5], 1.0),)))
    b = triplet_transform(MultiTriplet(np.eye(1), np.zeros(1), (([0.5], 1.0),)))
    assert triplet_path_displacement([a], [b]) == {"gamma": 0.0, "gauss": 0.0, "cubed": 0.0}
    c = triplet_transform(MultiTriplet(2 * np.eye(1), np.array([0.1]), (([0.5], 1.5),)))
    d = triplet_path_displacement([a], [c])
    assert d["gamma"] == pytest.approx(0.1) and d["gauss"] == pytest.approx(2.375 - 1.25)
    assert d["cubed"] == pytest.approx(0.0625)
