import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from apstat.metrics import (CharFnGrid, EmpiricalMeasure, PairedSample, bounded_lipschitz, gamma_metric, ky_fan,
                            ky_fan_from_gaps, prokhorov, wasserstein_1d)

D0 = EmpiricalMeasure.dirac([0.0])
D1 = EmpiricalMeasure.dirac([1.0])


def brute_prokhorov(mu, nu, step=1e-3):
    """Smallest grid e where every subset A of either support obeys the defining inequality."""
    def ok(a, b, e):
        dist = np.abs(a.points[:, None, 0] - b.points[None, :, 0])
        for r in range(1, a.size + 1):
            for sub in itertools.combinations(range(a.size), r):
                near = np.any(dist[list(sub)] < e, axis=0)
                if a.weights[list(sub)].sum() > b.weights[near].sum() + e + 1e-12:
                    return False
        return True
    # at e = max(total mass) every inequality holds trivially
    for e in np.arange(step, max(mu.mass, nu.mass) + 2 * step, step):
        if ok(mu, nu, e) and ok(nu, mu, e):
            return e
    return math.inf


def brute_bl_two_points(T, step=1e-3):
    # f(0) = a, f(T) = b, Lipschitz constant |a - b| / T, sup max(|a|, |b|)
    grid = np.arange(-1, 1 + step / 2, step)
    a, b = np.meshgrid(grid, grid, indexing="ij")
    feasible = np.abs(a - b) / T + np.maximum(np.abs(a), np.abs(b)) <= 1 + 1e-12
    return float(np.max(np.where(feasible, a - b, -np.inf)))


def test_identical_measures():
    m = EmpiricalMeasure(np.array([0.0, 1.0, 2.5]), np.array([0.2, 0.5, 0.3]))
    assert bounded_lipschitz(m, m) == 0.0
    assert prokhorov(m, m) == 0.0
    assert wasserstein_1d(m, m) == 0.0
    g = CharFnGrid.from_measure(m, 10)
    assert gamma_metric(g, g).value == 0.0


def test_gamma_two_diracs():
    ref = sum(2.0 ** -k * 2 * math.sin(min(k, math.pi) / 2) for k in range(1, 41))
    r = gamma_metric(CharFnGrid.from_measure(D0, 40), CharFnGrid.from_measure(D1, 40))
    assert r.value == pytest.approx(ref, abs=1e-9)
    assert r.value == pytest.approx(1.39953, abs=1e-5)


def test_gamma_independent_gaussian_grids():
    phi = lambda z: np.exp(-0.5 * np.sum(z * z, axis=1))
    a = CharFnGrid.from_function(phi, 1, 20)
    b = CharFnGrid.from_function(lambda z: np.exp(-0.5 * z[:, 0] ** 2), 1, 20)
    assert gamma_metric(a, b).value <= 1e-9


@pytest.mark.parametrize("T", [1.0, 10.0, 100.0])
def test_bl_two_diracs_against_brute_force(T):
    val = bounded_lipschitz(D0, EmpiricalMeasure.dirac([T]))
    assert val == pytest.approx(2 * T / (2 + T), rel=1e-9)
    assert val == pytest.approx(brute_bl_two_points(T), abs=3e-3)


def test_bl_monotone_in_separation():
    vals = [bounded_lipschitz(D0, EmpiricalMeasure.dirac([T])) for T in (1, 10, 100, 1000)]
    assert np.all(np.diff(vals) > 0) and vals[-1] < 2.0


def test_prokhorov_examples():
    assert prokhorov(D0, D1) == pytest.approx(1.0)
    assert prokhorov(D0, EmpiricalMeasure.dirac([0.0], 1.5)) == pytest.approx(0.5)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.floats(0.05, 1)), min_size=1, max_size=4,
                unique_by=lambda p: p[0]),
       st.lists(st.tuples(st.integers(-20, 20), st.floats(0.05, 1)), min_size=1, max_size=4,
                unique_by=lambda p: p[0]))
def test_prokhorov_against_subset_scan(a, b):
    mu = EmpiricalMeasure(np.array([x / 10 for x, _ in a]), np.array([w for _, w in a]))
    nu = EmpiricalMeasure(np.array([x / 10 for x, _ in b]), np.array([w for _, w in b]))
    val = prokhorov(mu, nu)
    assert val == pytest.approx(brute_prokhorov(mu, nu), abs=1.1e-3)
    assert prokhorov(mu, nu, "flow") == pytest.approx(prokhorov(mu, nu, "enumerate"), abs=1e-12)


def test_ky_fan_examples():
    assert ky_fan(PairedSample(np.arange(5.0), np.arange(5.0))) == 0.0
    assert ky_fan_from_gaps([0.9] * 4) == pytest.approx(0.9)
    assert ky_fan_from_gaps(np.linspace(0.1, 1.0, 10)) == pytest.approx(0.5)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 3), min_size=1, max_size=40))
def test_ky_fan_is_the_smallest_feasible_level(d):
    d = np.array(d)
    e = ky_fan_from_gaps(d)
    assert np.mean(d > e) <= e + 1e-12
    below = np.linspace(0, e, 50, endpoint=False) if e > 0 else []
    for e2 in below:
        assert np.mean(d > e2) > e2


def test_wasserstein_examples():
    for p in (1, 2, 3):
        assert wasserstein_1d(D0, D1, p) == pytest.approx(1.0)
    rng = np.random.default_rng(11)
    n = 10_000
    x, y = rng.standard_normal(n), 0.3 + rng.standard_normal(n)
    w = wasserstein_1d(EmpiricalMeasure.from_samples(x), EmpiricalMeasure.from_samples(y))
    assert w == pytest.approx(stats.wasserstein_distance(x, y), abs=1e-12)
    # two independent samples: the mean gap alone has standard error sqrt(2 / n)
    assert abs(w - 0.3) <= 3 * math.sqrt(2 / n)


def test_weak_convergence_consistency():
    vals = {name: [] for name in ("bl", "prok", "w1", "gamma")}
    g0 = CharFnGrid.from_measure(D0, 20)
    for l in (1, 2, 4, 8, 16):
        pts = np.linspace(-1 / l, 1 / l, 9)
        m = EmpiricalMeasure(pts, np.full(9, 1 / 9))
        vals["bl"].append(bounded_lipschitz(m, D0))
        vals["prok"].append(prokhorov(m, D0))
        vals["w1"].append(wasserstein_1d(m, D0))
        vals["gamma"].append(gamma_metric(CharFnGrid.from_measure(m, 20), g0).value)
    for v in vals.values():
        assert np.all(np.diff(v) < 0)
        assert v[-1] < 0.1


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.lists(st.floats(-3, 3), min_size=1, max_size=6))
def test_bl_controls_gamma(a, b):
    # gamma <= (2 + 4 sqrt n) * beta for probability measures
    mu, nu = EmpiricalMeasure.from_samples(a), EmpiricalMeasure.from_samples(b)
    beta = bounded_lipschitz(mu, nu)
    g = gamma_metric(CharFnGrid.from_measure(mu, 30), CharFnGrid.from_measure(nu, 30))
    assert g.value <= 6 * beta + 1e-9
