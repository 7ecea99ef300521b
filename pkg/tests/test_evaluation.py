import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refprior.baselines import default_bounds, uniform_sampler
from refprior.evaluation import (
    KsResult,
    curve_to_csv,
    ecdf,
    ks_statistic,
    ks_test,
    ks_threshold,
    ksd_curve,
    true_rp_sampler,
)
from refprior.models import BernoulliMean, GaussianMean, GaussianScale, PoissonRate

samples_st = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40)


def test_ecdf_examples():
    F = ecdf([1.0, 2.0, 3.0])
    assert F(0.5) == 0 and F(3.0) == 1 and F(10.0) == 1
    assert F(2.0) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        ecdf([])


def test_ks_examples():
    assert ks_statistic([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert ks_statistic([0.0, 1.0], [10.0, 11.0]) == 1.0
    assert ks_statistic([1.0, 2.0], [1.0, 3.0]) == 0.5
    with pytest.raises(ValueError):
        ks_statistic([], [1.0])


def test_ks_matches_brute_force_scan():
    # values on a 0.01 lattice, scan grid spacing 0.001: every ECDF plateau is visited
    rng = np.random.default_rng(0)
    grid = np.linspace(-1.0, 99.0, 100_001)
    for _ in range(5):
        a = np.round(rng.uniform(0, 98, rng.integers(5, 60)), 2)
        b = np.round(rng.gamma(2.0, 10.0, rng.integers(5, 60)).clip(0, 98), 2)
        Fa, Fb = ecdf(a), ecdf(b)
        brute = np.max(np.abs(Fa(grid) - Fb(grid)))
        assert abs(ks_statistic(a, b) - brute) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(samples_st, samples_st)
def test_ks_range_and_symmetry(a, b):
    d = ks_statistic(a, b)
    assert 0.0 <= d <= 1.0
    assert d == ks_statistic(b, a)


int_samples = st.lists(st.integers(-1000, 1000).map(float), min_size=1, max_size=40)


@settings(max_examples=100, deadline=None)
@given(int_samples, int_samples)
def test_ks_invariant_under_monotone_transform(a, b):
    # exact in floating point for these integers, so ties are preserved
    f = lambda v: np.asarray(v) ** 3 + 5 * np.asarray(v)
    assert ks_statistic(f(a), f(b)) == pytest.approx(ks_statistic(a, b), abs=1e-12)


def test_ks_multidimensional_takes_max():
    a = np.array([[0.0, 0.0], [1.0, 5.0]])
    b = np.array([[0.0, 10.0], [1.0, 11.0]])
    assert ks_statistic(a, b) == 1.0
    with pytest.raises(ValueError):
        ks_statistic(a, b[:, :1])


def test_threshold_examples():
    assert ks_threshold(1000, 1000) == pytest.approx(1.358 * math.sqrt(2 / 1000), rel=1e-3)
    assert ks_threshold(4000, 4000) == pytest.approx(ks_threshold(1000, 1000) / 2, rel=1e-12)
    assert ks_threshold(300, 700) == ks_threshold(700, 300)
    with pytest.raises(ValueError):
        ks_threshold(0, 5)


def test_ks_result_reject():
    r = ks_test([0.0, 1.0], [10.0, 11.0])
    assert isinstance(r, KsResult) and r.reject == (r.statistic > r.threshold)
    assert KsResult(0.1, 10, 10, 0.2).reject is False


def test_true_rp_bernoulli_symmetric():
    d = true_rp_sampler(BernoulliMean(), default_bounds(BernoulliMean()))
    assert abs(d.mass(0.0, 0.5) - d.mass(0.5, 1.0)) <= 1e-6


def test_true_rp_scale_decades():
    d = true_rp_sampler(GaussianScale(), (0.1, 10.0))
    assert abs(d.mass(0.1, 1.0) - d.mass(1.0, 10.0)) <= 1e-3


def test_true_rp_poisson_density_ratio():
    d = true_rp_sampler(PoissonRate(), (0.1, 20.0))
    step = d.points[1] - d.points[0]
    # interior probabilities follow 1/sqrt(lambda)
    i, j = 100, 400
    expect = math.sqrt(d.points[j] / d.points[i])
    assert d.probs[i] / d.probs[j] == pytest.approx(expect, abs=1e-6)
    assert step > 0


def test_true_rp_flat_model_is_uniform_grid():
    d = true_rp_sampler(GaussianMean(), (-1.0, 1.0), G=11)
    np.testing.assert_allclose(d.probs[1:-1], d.probs[1])
    assert d.probs[0] == pytest.approx(d.probs[1] / 2)


def test_true_rp_sample_within_bounds():
    d = true_rp_sampler(GaussianScale(), (0.1, 10.0))
    x = d.sample(1000, np.random.default_rng(0))
    assert x.shape == (1000, 1) and np.all((x >= 0.1) & (x <= 10.0))


def test_ksd_curve_truth_against_itself():
    model = BernoulliMean()
    bounds = default_bounds(model)
    truth = true_rp_sampler(model, bounds)
    accepted = 0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        own = truth.sample(1000, rng)
        row = ksd_curve({"own": own}, truth, [1000], rng)[0]
        accepted += row["ksd"] <= row["threshold"]
    assert accepted >= 4


def test_ksd_curve_uniform_rejected_for_bernoulli():
    model = BernoulliMean()
    bounds = default_bounds(model)
    rng = np.random.default_rng(1)
    row = ksd_curve({"uniform": uniform_sampler(bounds, 1000, rng)}, true_rp_sampler(model, bounds), [1000], rng)[0]
    assert row["ksd"] > row["threshold"]


def test_ksd_curve_single_point():
    rng = np.random.default_rng(2)
    rows = ksd_curve({"a": rng.uniform(size=(5, 1))}, rng.uniform(size=(5, 1)), [1])
    assert rows[0]["ksd"] in (0.0, 1.0)


def test_ksd_curve_errors_and_csv():
    with pytest.raises(ValueError, match="short"):
        ksd_curve({"short": np.zeros((3, 1))}, np.zeros((10, 1)), [5])
    rows = ksd_curve({"m": np.arange(4.0)}, np.arange(4.0), [2, 4])
    text = curve_to_csv(rows)
    assert text.splitlines()[0] == "method,n,ksd,threshold"
    assert text.splitlines()[1].startswith("m,2,0,")
