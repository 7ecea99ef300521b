"""Reference-prior baselines: a pointwise Monte Carlo estimate normalized on a grid,
an iterative Metropolis-Hastings sampler, and a flat prior."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats
from scipy.special import entr, logsumexp

from .models import (
    BernoulliMean,
    DomainError,
    GaussianMean,
    GaussianScale,
    LikelihoodModel,
    PoissonRate,
)

__all__ = [
    "DEFAULT_BOUNDS",
    "default_bounds",
    "BergerConfig",
    "DiscreteGridDistribution",
    "McmcConfig",
    "McmcResult",
    "berger_log_prior_at",
    "berger_grid_sampler",
    "lw_mcmc",
    "lw_log_accept",
    "x_grid",
    "uniform_sampler",
    "samples_to_csv",
]

#: Bounded stand-ins for the parameter domain of improper priors.
DEFAULT_BOUNDS = {
    "BernoulliMean": (1e-3, 1 - 1e-3),
    "GaussianScale": (0.1, 10.0),
    "PoissonRate": (0.1, 20.0),
    "GaussianMean": (-10.0, 10.0),
}


def default_bounds(model: LikelihoodModel) -> tuple[float, float]:
    return DEFAULT_BOUNDS[model.kind]


def _check_bounds(bounds):
    lo, hi = float(bounds[0]), float(bounds[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"bounds must be finite with lower < upper, got {bounds}")
    return lo, hi


class DiscreteGridDistribution:
    """Normalized probability table over grid points, sampled by inverse CDF."""

    def __init__(self, points, log_weights):
        self.points = np.asarray(points, dtype=float)
        log_weights = np.asarray(log_weights, dtype=float)
        if self.points.shape != log_weights.shape or self.points.ndim != 1:
            raise ValueError("points and weights must be matching 1-d arrays")
        if np.any(np.diff(self.points) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if not np.any(np.isfinite(log_weights)):
            raise ValueError("all grid weights are zero")
        self.probs = np.exp(log_weights - logsumexp(log_weights))
        self.cdf = np.cumsum(self.probs)
        self.cdf[-1] = 1.0

    def __len__(self):
        return len(self.points)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` draws as an ``(n, 1)`` array."""
        u = rng.random(n)
        idx = np.searchsorted(self.cdf, u, side="right")
        return self.points[np.minimum(idx, len(self.points) - 1)][:, None]

    def mass(self, lo: float, hi: float) -> float:
        """Probability of ``[lo, hi]`` when each point's mass is spread evenly
        over its cell (edges at the midpoints between neighbours)."""
        x = self.points
        edges = np.concatenate([x[:1], 0.5 * (x[1:] + x[:-1]), x[-1:]])
        cum = np.concatenate([[0.0], self.cdf])
        return float(np.interp(hi, edges, cum) - np.interp(lo, edges, cum))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["point", "probability"])
        for p, q in zip(self.points, self.probs):
            w.writerow([f"{p:.17g}", f"{q:.17g}"])
        return buf.getvalue()


# -- pointwise grid estimate ---------------------------------------------------------


@dataclass
class BergerConfig:
    J: int = 100
    S: int = 50
    N: int = 500
    bounds: tuple = (1e-3, 1 - 1e-3)
    G: int = 1000

    def validate(self):
        if min(self.J, self.S, self.N, self.G) < 1:
            raise ValueError("J, S, N and G must all be >= 1")
        _check_bounds(self.bounds)

    def to_dict(self):
        d = asdict(self)
        d["bounds"] = list(self.bounds)
        return d


def berger_log_prior_at(model, theta0, cfg: BergerConfig, rng, theta_hat=None) -> float:
    """Log of the pointwise estimate

        (1/J) sum_j [log p(D_j|theta0) - log sum_s p(D_j|theta_s)]

    with ``D_j ~ p(.|theta0)`` of size ``N``.  Each dataset gets its own ``S``
    uniform draws on the bounds unless ``theta_hat`` is given, either as one
    ``(S, D)`` set shared by all datasets or as a ``(J, S, D)`` array.
    """
    lo, hi = _check_bounds(cfg.bounds)
    theta0 = model.check(theta0).reshape(model.param_dim)
    if np.any((theta0 < lo) | (theta0 > hi)):
        raise DomainError(f"theta0 {theta0} outside bounds {cfg.bounds}")
    stats_ = model.sample_stats(theta0, cfg.N, cfg.J, rng)
    if theta_hat is None:
        theta_hat = rng.uniform(lo, hi, size=(cfg.J, cfg.S, model.param_dim))
    theta_hat = np.asarray(theta_hat, dtype=float)
    if theta_hat.ndim == 1:
        theta_hat = theta_hat[:, None]
    if theta_hat.ndim == 2:
        theta_hat = theta_hat[None]
    own = model.stats_loglik(theta0, stats_, cfg.N)  # (J,)
    others = model.stats_loglik(theta_hat, stats_[:, None, ...], cfg.N)  # (J, S)
    return float(np.mean(own - logsumexp(others, axis=1)))


def berger_grid_sampler(model, cfg: BergerConfig, rng, points=None) -> DiscreteGridDistribution:
    """Pointwise estimates on ``G`` evenly spaced points, normalized into a grid distribution."""
    cfg.validate()
    if model.param_dim != 1:
        raise ValueError("grid sampling is one-dimensional")
    if points is None:
        points = np.linspace(*cfg.bounds, cfg.G)
    logw = np.array([berger_log_prior_at(model, p, cfg, rng) for p in points])
    return DiscreteGridDistribution(points, logw)


# -- iterative MCMC ----------------------------------------------------------


@dataclass
class McmcConfig:
    iterations: int = 10000
    S_t: int = 50
    keep: int = 1000
    bounds: tuple = (1e-3, 1 - 1e-3)
    x_grid_size: int = 1000

    def validate(self):
        if min(self.S_t, self.keep, self.x_grid_size) < 1:
            raise ValueError("S_t, keep and x_grid_size must be >= 1")
        if self.iterations < self.keep:
            raise ValueError("iterations must be at least the kept sample count")
        _check_bounds(self.bounds)

    def to_dict(self):
        d = asdict(self)
        d["bounds"] = list(self.bounds)
        return d


@dataclass
class McmcResult:
    samples: np.ndarray
    W: np.ndarray
    fields: list = field(default_factory=list)
    accepted: int = 0


def x_grid(model, bounds, size: int = 1000):
    """Discretized observation space and per-point quadrature weights."""
    lo, hi = _check_bounds(bounds)
    if isinstance(model, BernoulliMean):
        return np.array([0.0, 1.0]), np.ones(2)
    if isinstance(model, PoissonRate):
        return np.arange(size, dtype=float), np.ones(size)
    if isinstance(model, GaussianScale):
        x = np.linspace(model.mu - 6 * hi, model.mu + 6 * hi, size)
    elif isinstance(model, GaussianMean):
        x = np.linspace(lo - 6 * model.sigma, hi + 6 * model.sigma, size)
    else:
        raise ValueError(f"no observation grid for {model.kind}")
    w = np.full(size, x[1] - x[0])
    w[[0, -1]] *= 0.5
    return x, w


def _grid_pmf(model, theta, x, dx):
    """Observation distribution of each row of ``theta`` on the grid, renormalized."""
    theta = np.atleast_2d(theta)
    if isinstance(model, BernoulliMean):
        p = theta[:, :1]
        logp = np.log(np.concatenate([1 - p, p], axis=1))
    elif isinstance(model, PoissonRate):
        logp = stats.poisson.logpmf(x[None, :], theta[:, :1])
    elif isinstance(model, GaussianScale):
        logp = stats.norm.logpdf(x[None, :], model.mu, theta[:, :1]) + np.log(dx)
    else:
        logp = stats.norm.logpdf(x[None, :], theta[:, :1], model.sigma) + np.log(dx)
    logp = logp - logsumexp(logp, axis=1, keepdims=True)
    return np.exp(logp), logp


def lw_log_accept(model, theta, theta_new, t: int, W, x, dx) -> float:
    """Log MH ratio for moving ``theta -> theta_new`` under the iteration-``t`` target.

    The target satisfies ``log p(a)/p(b) = (t+1)(H_b - H_a) + sum_x W(x)[p(x|b) - p(x|a)]``;
    the move is accepted with the ratio for ``a = theta_new, b = theta``.
    """
    if np.array_equal(theta, theta_new):
        return 0.0
    P, _ = _grid_pmf(model, np.vstack([theta, theta_new]), x, dx)
    H = entr(P).sum(axis=1)
    return float((t + 1) * (H[0] - H[1]) + np.sum(W * (P[0] - P[1])))


def lw_mcmc(model, cfg: McmcConfig, rng: np.random.Generator, return_state: bool = False):
    """Iterative MCMC with a uniform independence proposal.

    Iteration ``t`` runs ``S_t`` Metropolis-Hastings steps on the current target,
    then adds ``log (1/S_t) sum_s p(x|theta_s)`` over those steps' states to ``W``.
    The last ``keep`` chain states are returned as an ``(keep, 1)`` array.
    """
    cfg.validate()
    if model.param_dim != 1:
        raise ValueError("lw_mcmc supports one-dimensional parameters")
    lo, hi = _check_bounds(cfg.bounds)
    x, dx = x_grid(model, cfg.bounds, cfg.x_grid_size)
    W = np.zeros_like(x)
    fields = []
    chain = np.empty(cfg.iterations)
    theta = rng.uniform(lo, hi, size=(1,))
    P_cur, logP_cur = _grid_pmf(model, theta, x, dx)
    H_cur = float(entr(P_cur).sum())
    accepted = 0
    block = []
    t = 0
    for i in range(cfg.iterations):
        prop = rng.uniform(lo, hi, size=(1,))
        P_new, logP_new = _grid_pmf(model, prop, x, dx)
        H_new = float(entr(P_new).sum())
        log_a = (t + 1) * (H_cur - H_new) + float(np.sum(W * (P_cur[0] - P_new[0])))
        if math.log(rng.random()) < log_a:
            theta, P_cur, logP_cur, H_cur = prop, P_new, logP_new, H_new
            accepted += 1
        chain[i] = theta[0]
        block.append(logP_cur[0])
        if len(block) == cfg.S_t:
            f = logsumexp(block, axis=0) - math.log(cfg.S_t)
            fields.append(f)
            W = W + f
            block = []
            t += 1
    samples = chain[-cfg.keep :][:, None]
    if return_state:
        return McmcResult(samples, W, fields, accepted)
    return samples


def uniform_sampler(bounds, n: int, rng: np.random.Generator, dim: int = 1) -> np.ndarray:
    lo, hi = float(bounds[0]), float(bounds[1])
    if hi < lo:
        raise ValueError("upper bound below lower bound")
    return rng.uniform(lo, hi, size=(n, dim))


def samples_to_csv(samples) -> str:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, None]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"theta_{d}" for d in range(samples.shape[1])])
    for row in samples:
        w.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue()
