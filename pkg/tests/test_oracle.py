import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid
from scipy.stats import norm

from hpber.oracle import (GaussianSpec, binary_entropy, bhattacharyya_sweep, class_counts,
                          discrete_ber, discrete_bhattacharyya_bound, discrete_hp, discrete_js,
                          discrete_js_bound, discrete_mixture_rest, discrete_ovr_ber,
                          discrete_pairwise_sum, gaussian_ber, gaussian_bhattacharyya,
                          hp_bounds_exact, js_sweep, lemma_b1_check, lemma_sweep,
                          monte_carlo_gaussian, ovr_sweep, sample_gaussian_mixture,
                          theorem2_sweep, two_gaussians)

F1 = np.array([0.5, 0.5, 0.0])
F2 = np.array([0.0, 0.5, 0.5])
DISJ1 = np.array([0.3, 0.7, 0.0, 0.0])
DISJ2 = np.array([0.0, 0.0, 0.4, 0.6])


def test_discrete_ber_examples():
    assert discrete_ber(F1, F2, 0.5) == pytest.approx(0.25, abs=1e-15)
    assert discrete_ber(F1, F1, 0.3) == pytest.approx(0.3, abs=1e-15)
    assert discrete_ber(DISJ1, DISJ2, 0.4) == 0.0


def test_discrete_hp_examples():
    assert discrete_hp(F1, F1, 0.3) == pytest.approx(0.0, abs=1e-12)
    for p in (0.5, 0.2, 0.9):
        assert discrete_hp(DISJ1, DISJ2, p) == pytest.approx(1.0, abs=1e-12)
    # hand summation for the overlapping pair: only the middle atom is shared
    # integral of (p1 f1 - p2 f2)^2 / (p1 f1 + p2 f2) = 0.25 + 0 + 0.25
    assert discrete_hp(F1, F2, 0.5) == pytest.approx(0.5, abs=1e-12)
    lo, hi = hp_bounds_exact(F1, F2, 0.5)
    assert lo <= 0.25 <= hi


def test_bounds_limits():
    assert hp_bounds_exact(F1, F1, 0.5) == pytest.approx((0.5, 0.5))
    assert hp_bounds_exact(DISJ1, DISJ2, 0.5) == pytest.approx((0.0, 0.0), abs=1e-12)


def test_js_examples():
    assert discrete_js(F1, F1, 0.5) == pytest.approx(0.0, abs=1e-12)
    assert binary_entropy(0.5) == pytest.approx(1.0)
    assert discrete_js_bound(F1, F1, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert discrete_js(DISJ1, DISJ2, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert discrete_js_bound(DISJ1, DISJ2, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_lemma_examples():
    assert lemma_b1_check(1.0, 1.0)
    lhs = math.log(3) + 2 * math.log(1.5)
    assert lhs == pytest.approx(1.9095, abs=5e-5)
    assert 8 * math.log(2) / 3 == pytest.approx(1.8484, abs=5e-5)
    assert lemma_b1_check(1.0, 2.0)
    with pytest.raises(ValueError):
        lemma_b1_check(0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_lemma_equality_on_diagonal(x):
    lhs = 2 * x * math.log1p(1.0)
    rhs = 4 * math.log(2) * x * x / (2 * x)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, x)
    assert lemma_b1_check(x, x)


def test_bhattacharyya_examples():
    assert discrete_bhattacharyya_bound(F1, F1, 0.5) == pytest.approx(0.5)
    assert discrete_bhattacharyya_bound(DISJ1, DISJ2, 0.5) == 0.0


def test_ovr_examples():
    fs = [F1, F2]
    assert discrete_ovr_ber(fs, [0.3, 0.7], 1) == pytest.approx(discrete_ber(F1, F2, 0.3))
    assert discrete_ovr_ber(fs, [0.3, 0.7], 2) == pytest.approx(discrete_ber(F1, F2, 0.3))
    iso = [np.array([1.0, 0, 0, 0]), np.array([0, 0.5, 0.5, 0]), np.array([0, 0.2, 0.3, 0.5])]
    assert discrete_ovr_ber(iso, [0.2, 0.5, 0.3], 1) == 0.0


def test_mixture_rest_examples():
    g, p_g = discrete_mixture_rest([F1, F2], [0.3, 0.7], 1)
    assert np.allclose(g, F2) and p_g == pytest.approx(0.7)
    u = np.full(5, 0.2)
    g, p_g = discrete_mixture_rest([u, u, u, u], [0.1, 0.2, 0.3, 0.4], 3)
    assert np.allclose(g, u) and p_g == pytest.approx(0.7)


def test_mixture_rest_plumbing():
    rng = np.random.default_rng(1)
    fs = [rng.dirichlet(np.ones(6)) for _ in range(4)]
    ps = rng.dirichlet(np.ones(4))
    for k in range(1, 5):
        g, p_g = discrete_mixture_rest(fs, ps, k)
        q = discrete_ber(fs[k - 1], g, 1 - p_g)
        # same quantity straight from the weighted components
        own = ps[k - 1] * fs[k - 1]
        rest = sum(ps[c] * fs[c] for c in range(4) if c != k - 1)
        assert q == pytest.approx(np.minimum(own, rest).sum(), abs=1e-12)
        assert q <= discrete_ovr_ber(fs, ps, k) + 1e-12 <= discrete_pairwise_sum(fs, ps, k) + 2e-12


def test_input_validation():
    with pytest.raises(ValueError):
        discrete_ber([0.5, 0.6], [0.5, 0.5], 0.5)
    with pytest.raises(ValueError):
        discrete_ber([0.5, 0.5], [1.0, 0, 0], 0.5)
    with pytest.raises(ValueError):
        discrete_ber(F1, F2, 1.0)
    with pytest.raises(ValueError):
        gaussian_ber(GaussianSpec([0.0], 1.0, 0.5), GaussianSpec([1.0], 2.0, 0.5))


def test_sweeps_small():
    assert theorem2_sweep(100, seed=3) == 0
    assert js_sweep(100, seed=3) == 0
    assert bhattacharyya_sweep(100, seed=3) == 0
    assert lemma_sweep(2000, seed=3) == 0
    assert ovr_sweep(50, seed=3) == 0


def test_gaussian_ber_examples():
    s1, s2 = two_gaussians(0.5, 2.0)
    assert gaussian_ber(s1, s2) == pytest.approx(norm.cdf(-1.0), abs=1e-15)
    assert gaussian_ber(s1, s2) == pytest.approx(0.158655, abs=5e-7)
    assert gaussian_ber(*two_gaussians(0.15, 0.0)) == 0.15
    decay = [gaussian_ber(*two_gaussians(0.15, d)) for d in np.arange(0, 12.5, 0.5)]
    assert np.all(np.diff(decay) < 0) and decay[-1] < 1e-9


def test_gaussian_ber_matches_numeric_integral():
    # 1-D projection: integrate min(p1 phi(x), p2 phi(x - delta)) on a fine grid
    for p1, delta in [(0.15, 1.0), (1 / 3, 2.5), (0.5, 0.7)]:
        x = np.linspace(-15, 20, 400001)
        integrand = np.minimum(p1 * norm.pdf(x), (1 - p1) * norm.pdf(x - delta))
        numeric = trapezoid(integrand, x)
        assert gaussian_ber(*two_gaussians(p1, delta, d=3)) == pytest.approx(numeric, abs=1e-8)


def test_gaussian_bhattacharyya_examples():
    assert gaussian_bhattacharyya(*two_gaussians(0.5, 0.0)) == 0.5
    assert gaussian_bhattacharyya(*two_gaussians(0.15, 0.0)) == pytest.approx(0.357, abs=5e-4)
    assert gaussian_bhattacharyya(*two_gaussians(0.5, 4.0)) == pytest.approx(0.5 * math.e ** -2)
    assert gaussian_bhattacharyya(*two_gaussians(0.5, 4.0)) == pytest.approx(0.0677, abs=5e-5)


def test_gaussian_closed_forms_scale_free():
    a = gaussian_ber(*two_gaussians(0.3, 1.7, sigma=1.0))
    b = gaussian_ber(*two_gaussians(0.3, 1.7, sigma=5.0))
    assert a == pytest.approx(b, abs=1e-15)


def test_monte_carlo_small():
    s1, s2 = two_gaussians(0.3, 1.5)
    mc = monte_carlo_gaussian(s1, s2, n_samples=200000, seed=1)
    assert abs(mc["ber"] - gaussian_ber(s1, s2)) < 4 * mc["ber_se"]
    assert abs(mc["bhattacharyya"] - gaussian_bhattacharyya(s1, s2)) < 4 * mc["bhattacharyya_se"]


def test_class_counts_and_sampler():
    assert list(class_counts([0.15, 0.85], 1000)) == [150, 850]
    assert list(class_counts([0.33, 0.67], 1000)) == [330, 670]
    assert class_counts([1 / 3, 1 / 3, 1 / 3], 100).sum() == 100
    a = sample_gaussian_mixture(two_gaussians(0.15, 2.0), 2, 1000, seed=9)
    b = sample_gaussian_mixture(two_gaussians(0.15, 2.0), 2, 1000, seed=9)
    assert list(a.counts) == [150, 850] and a.d == 2
    assert np.array_equal(a.features, b.features)
    c = sample_gaussian_mixture(two_gaussians(0.33, 1.0), 2, 1000, seed=9)
    assert list(c.counts) == [330, 670]


def test_sampler_moments():
    ds = sample_gaussian_mixture(two_gaussians(0.5, 3.0, d=2, sigma=2.0), 2, 20000, seed=4)
    X2 = ds.features[ds.labels == 2]
    assert X2.mean(axis=0) == pytest.approx([6.0, 0.0], abs=0.1)
    assert X2.std(axis=0) == pytest.approx([2.0, 2.0], abs=0.05)
