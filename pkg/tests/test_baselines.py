import math

import numpy as np
import pytest
from scipy import stats

from refprior.baselines import (
    BergerConfig,
    DiscreteGridDistribution,
    McmcConfig,
    berger_grid_sampler,
    berger_log_prior_at,
    default_bounds,
    lw_log_accept,
    lw_mcmc,
    samples_to_csv,
    uniform_sampler,
    x_grid,
)
from refprior.evaluation import ks_statistic, true_rp_sampler
from refprior.models import BernoulliMean, DomainError, GaussianMean, GaussianScale, PoissonRate

# -- grid estimate --------------------------------------------------------------------------


@pytest.mark.parametrize("model,theta0", [(BernoulliMean(), 0.3), (PoissonRate(), 4.0), (GaussianScale(), 2.0)])
def test_berger_cancellation_identity(model, theta0):
    cfg = BergerConfig(J=20, S=50, N=500, bounds=default_bounds(model))
    forced = np.full((50, 1), theta0)
    value = berger_log_prior_at(model, theta0, cfg, np.random.default_rng(0), theta_hat=forced)
    assert abs(value - math.log(1 / 50)) <= 1e-12


def test_berger_accepts_per_dataset_theta_hat():
    cfg = BergerConfig(J=4, S=3, N=10)
    forced = np.full((4, 3, 1), 0.6)
    value = berger_log_prior_at(BernoulliMean(), 0.6, cfg, np.random.default_rng(0), theta_hat=forced)
    assert value == pytest.approx(math.log(1 / 3), abs=1e-12)


def test_berger_rejects_theta0_outside_bounds():
    with pytest.raises(DomainError):
        berger_log_prior_at(BernoulliMean(), 0.9999, BergerConfig(), np.random.default_rng(0))


def test_berger_large_sample_tracks_jeffreys_ratio():
    # with many prior draws the estimate approaches log p*(theta0) up to a constant
    cfg = BergerConfig(J=100, S=5000, N=500)
    rng = np.random.default_rng(1)
    lo = berger_log_prior_at(BernoulliMean(), 0.1, cfg, rng)
    mid = berger_log_prior_at(BernoulliMean(), 0.5, cfg, rng)
    expect = math.log(BernoulliMean().jeffreys_density(0.1) / BernoulliMean().jeffreys_density(0.5))
    assert lo - mid == pytest.approx(expect, abs=0.15)


def test_berger_grid_sampler_deterministic():
    cfg = BergerConfig(J=5, S=5, N=50, G=30)
    a = berger_grid_sampler(BernoulliMean(), cfg, np.random.default_rng(2))
    b = berger_grid_sampler(BernoulliMean(), cfg, np.random.default_rng(2))
    assert a.to_csv() == b.to_csv() and len(a) == 30


def test_berger_config_validation():
    with pytest.raises(ValueError):
        BergerConfig(J=0).validate()
    with pytest.raises(ValueError):
        BergerConfig(bounds=(1.0, 0.5)).validate()


# -- grid distribution ---------------------------------------------------------------------


def test_grid_cdf_nondecreasing_and_ends_at_one():
    rng = np.random.default_rng(3)
    d = DiscreteGridDistribution(np.linspace(0, 1, 500), rng.normal(0, 5, 500))
    assert np.all(np.diff(d.cdf) >= 0)
    assert abs(d.cdf[-1] - 1.0) <= 1e-12


def test_grid_sampling_matches_probabilities():
    d = DiscreteGridDistribution(np.array([0.0, 1.0, 2.0]), np.log([0.2, 0.5, 0.3]))
    x = d.sample(100_000, np.random.default_rng(4))[:, 0]
    freq = np.array([(x == v).mean() for v in (0.0, 1.0, 2.0)])
    assert np.all(np.abs(freq - [0.2, 0.5, 0.3]) < 0.005)


def test_grid_zero_weights_kept_out():
    d = DiscreteGridDistribution(np.array([0.0, 1.0, 2.0]), np.array([-np.inf, 0.0, -np.inf]))
    assert np.all(d.sample(100, np.random.default_rng(0)) == 1.0)
    with pytest.raises(ValueError):
        DiscreteGridDistribution(np.array([0.0, 1.0]), np.array([-np.inf, -np.inf]))
    with pytest.raises(ValueError):
        DiscreteGridDistribution(np.array([1.0, 0.0]), np.zeros(2))


def test_grid_csv():
    d = DiscreteGridDistribution(np.array([0.5, 1.5]), np.array([0.0, 0.0]))
    assert d.to_csv() == "point,probability\n0.5,0.5\n1.5,0.5\n"


# -- iterative MCMC --------------------------------------------------------------------


def test_lw_accept_identical_is_zero():
    x, dx = x_grid(BernoulliMean(), (0.001, 0.999))
    assert lw_log_accept(BernoulliMean(), np.array([0.3]), np.array([0.3]), 5, np.ones(2), x, dx) == 0.0


@pytest.mark.parametrize("model", [BernoulliMean(), PoissonRate(), GaussianScale()])
def test_lw_accept_is_target_ratio(model):
    # target_t(theta) ∝ exp(-(t+1) H(theta) - sum_x W(x) p(x|theta))
    bounds = default_bounds(model)
    x, dx = x_grid(model, bounds, 200)
    rng = np.random.default_rng(5)
    W = rng.normal(size=x.size)
    t = 3

    def log_target(theta):
        if isinstance(model, BernoulliMean):
            p = np.array([1 - theta, theta])
        elif isinstance(model, PoissonRate):
            p = stats.poisson.pmf(x, theta)
            p = p / p.sum()
        else:
            p = stats.norm.pdf(x, 0.0, theta) * dx
            p = p / p.sum()
        return -(t + 1) * stats.entropy(p) - np.sum(W * p)

    for _ in range(10):
        a, b = rng.uniform(*bounds, size=2)
        got = lw_log_accept(model, np.array([a]), np.array([b]), t, W, x, dx)
        assert got == pytest.approx(log_target(b) - log_target(a), rel=1e-9, abs=1e-9)


def test_x_grid_shapes():
    x, dx = x_grid(GaussianScale(), (0.1, 10.0), 1000)
    assert x.size == 1000 and x[0] == -60.0 and x[-1] == 60.0
    assert dx[0] == pytest.approx(0.5 * (x[1] - x[0]))
    x, dx = x_grid(PoissonRate(), (0.1, 20.0), 100)
    assert x.tolist() == list(range(100))


def test_mcmc_in_bounds_deterministic_and_replayable():
    cfg = McmcConfig(iterations=600, S_t=50, keep=100, bounds=(0.1, 20.0), x_grid_size=100)
    runs = [lw_mcmc(PoissonRate(), cfg, np.random.default_rng(6), return_state=True) for _ in range(2)]
    res = runs[0]
    assert res.samples.shape == (100, 1)
    assert np.all((res.samples >= 0.1) & (res.samples <= 20.0))
    assert res.samples.tobytes() == runs[1].samples.tobytes()
    assert len(res.fields) == 600 // 50
    replay = np.zeros_like(res.W)
    for f in res.fields:
        replay = replay + f
    assert np.array_equal(replay, res.W)


def test_mcmc_config_validation():
    with pytest.raises(ValueError):
        McmcConfig(iterations=10, keep=100).validate()
    with pytest.raises(ValueError):
        lw_mcmc(GaussianScale(dims=2), McmcConfig(iterations=10, keep=5, bounds=(0.1, 10)), np.random.default_rng(0))


@pytest.mark.xfail(strict=True, reason="the chain concentrates on a handful of states; see the decisions ledger")
def test_mcmc_bernoulli_beats_uniform():
    model = BernoulliMean()
    rng = np.random.default_rng(7)
    bounds = default_bounds(model)
    chain = lw_mcmc(model, McmcConfig(bounds=bounds), rng)
    truth = true_rp_sampler(model, bounds).sample(1000, rng)
    flat = uniform_sampler(bounds, 1000, rng)
    assert ks_statistic(chain, truth) < ks_statistic(flat, truth)


# -- uniform ------------------------------------------------------------------------------------


def test_uniform_examples():
    rng = np.random.default_rng(8)
    assert abs(uniform_sampler((0, 1), 100_000, rng).mean() - 0.5) < 0.005
    x = uniform_sampler((0.3, 0.3 + 1e-12), 10, rng)
    np.testing.assert_allclose(x, 0.3, atol=1e-11)
    assert uniform_sampler((0, 1), 0, rng).shape == (0, 1)
    with pytest.raises(ValueError):
        uniform_sampler((1, 0), 3, rng)


def test_samples_csv():
    assert samples_to_csv(np.array([0.25, 1.0])) == "theta_0\n0.25\n1\n"
    assert samples_to_csv(np.ones((1, 2))).splitlines()[0] == "theta_0,theta_1"


def test_default_bounds():
    assert default_bounds(BernoulliMean()) == (1e-3, 1 - 1e-3)
    assert default_bounds(GaussianScale()) == (0.1, 10.0)
    assert default_bounds(PoissonRate()) == (0.1, 20.0)
    assert default_bounds(GaussianMean())[0] < 0
