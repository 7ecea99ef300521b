"""Likelihood families with closed-form information quantities.

Every family works on parameter arrays whose last axis is the parameter
dimension ``D``; leading axes broadcast.  KL divergences and entropies are
per observation.  A dataset of ``N`` observations has ``N`` times these values.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import special, stats

__all__ = [
    "DomainError",
    "LOG_ZERO",
    "LikelihoodModel",
    "BernoulliMean",
    "GaussianMean",
    "GaussianScale",
    "PoissonRate",
    "model_from_dict",
    "model_from_json",
]

#: Stand-in for ``log 0``; finite so that max/argmax stay well defined.
LOG_ZERO = -np.finfo(float).max

_POISSON_ENTROPY_TOL = 1e-10


class DomainError(ValueError):
    """A parameter lies outside the family's open parameter domain."""


def _size_tuple(size, theta) -> tuple:
    if size is None:
        return np.shape(theta)[:-1]
    return tuple(np.atleast_1d(size).astype(int))


def _as_params(theta, dim: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 0:
        theta = theta[None]
    if theta.shape[-1] != dim:
        raise ValueError(f"expected parameter dimension {dim}, got shape {theta.shape}")
    return theta


@dataclass(frozen=True)
class LikelihoodModel:
    """Base class; subclasses fill in the per-family formulas."""

    kind = "abstract"

    @property
    def param_dim(self) -> int:
        return 1

    @property
    def domain(self) -> tuple[float, float]:
        """Open interval shared by every parameter dimension."""
        raise NotImplementedError

    # -- parameter checks -------------------------------------------------
    def check(self, theta) -> np.ndarray:
        theta = _as_params(theta, self.param_dim)
        lo, hi = self.domain
        bad = ~((theta > lo) & (theta < hi))
        if np.any(bad):
            first = theta[bad].flat[0]
            raise DomainError(f"{self.kind}: parameter {first!r} outside ({lo}, {hi})")
        return theta

    def _check_closed(self, theta) -> np.ndarray:
        # sampling/likelihood also accept the closed boundary where it is meaningful
        return self.check(theta)

    # -- data -------------------------------------------------------------
    def sample_dataset(self, theta, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` i.i.d. observations; returns shape ``(n,)`` or ``(n, D)``."""
        if n < 0:
            raise ValueError("dataset size must be nonnegative")
        theta = self._check_closed(theta)
        return self._sample(theta, n, rng)

    def log_likelihood(self, theta, data) -> float:
        """Sum of per-observation log densities.  Impossible data gives :data:`LOG_ZERO`."""
        theta = self._check_closed(theta)
        data = self._check_data(data)
        if len(data) == 0:
            return 0.0
        value = float(np.sum(self._logpdf(theta, data)))
        if not np.isfinite(value):
            return LOG_ZERO
        return value

    def _check_data(self, data) -> np.ndarray:
        return np.asarray(data, dtype=float)

    # -- information quantities --------------------------------------------
    def entropy(self, theta) -> np.ndarray:
        """Entropy of a single observation."""
        return self._entropy(self.check(theta))

    def kld(self, theta_a, theta_b) -> np.ndarray:
        """``KL[p(x|theta_a) || p(x|theta_b)]`` for one observation, summed over dimensions."""
        return self._kld(self._check_closed(theta_a), self._check_closed(theta_b))

    def pairwise_kld(self, theta) -> np.ndarray:
        """``(S, S)`` matrix ``K[i, j] = kld(theta_i, theta_j)`` for rows of ``theta``."""
        theta = self._check_closed(np.atleast_2d(theta))
        return self._kld(theta[:, None, :], theta[None, :, :])

    def kld_grad(self, theta_a, theta_b) -> tuple[np.ndarray, np.ndarray]:
        """Partial derivatives of :meth:`kld` with respect to each argument."""
        a, b = np.broadcast_arrays(self.check(theta_a), self.check(theta_b))
        return self._kld_grad(a, b)

    def cross_entropy(self, theta_a, theta_b) -> np.ndarray:
        return self.entropy(theta_a) + self.kld(theta_a, theta_b)

    def jeffreys_density(self, theta) -> np.ndarray:
        """Unnormalized Jeffreys (and, in one dimension, reference) prior density."""
        return self._jeffreys(self.check(theta))

    # -- sufficient statistics ------------------------------------------------
    def sample_stats(self, theta, n: int, size, rng: np.random.Generator) -> np.ndarray:
        """Sufficient statistics of datasets of ``n`` observations from ``theta``.

        ``size=None`` draws one dataset per leading index of ``theta``.
        """
        raise NotImplementedError

    def stats_loglik(self, theta, stats, n: int) -> np.ndarray:
        """Log-likelihood of a dataset summarized by ``stats``, up to a
        parameter-free base-measure term.  Broadcasts ``theta`` against ``stats``."""
        raise NotImplementedError

    def pairwise_stats_loglik(self, theta, stats, n: int) -> np.ndarray:
        """``L[i, j]``: :meth:`stats_loglik` of dataset ``i`` under ``theta_j``."""
        theta = np.atleast_2d(theta)
        return self.stats_loglik(theta[None, :, :], np.asarray(stats)[:, None, ...], n)

    def stats_of(self, data) -> np.ndarray:
        raise NotImplementedError

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": {}, "dims": self.param_dim}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class BernoulliMean(LikelihoodModel):
    kind = "BernoulliMean"

    @property
    def domain(self):
        return (0.0, 1.0)

    def _check_closed(self, theta):
        theta = _as_params(theta, 1)
        if np.any((theta < 0) | (theta > 1)) or np.any(np.isnan(theta)):
            raise DomainError(f"BernoulliMean: parameter outside [0, 1]: {theta.ravel()[:3]}")
        return theta

    def _check_data(self, data):
        data = np.asarray(data, dtype=float).ravel()
        if np.any((data != 0) & (data != 1)):
            raise ValueError("Bernoulli observations must be 0 or 1")
        return data

    def _sample(self, theta, n, rng):
        return (rng.random(n) < theta[..., 0]).astype(np.int64)

    def _logpdf(self, theta, data):
        p = theta[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = special.xlogy(data, p) + special.xlogy(1 - data, 1 - p)
        return np.where(np.isnan(out), -np.inf, out)

    def _entropy(self, theta):
        p = theta[..., 0]
        return -(special.xlogy(p, p) + special.xlogy(1 - p, 1 - p))

    def _kld(self, a, b):
        p, q = a[..., 0], b[..., 0]
        return special.xlogy(p, p / q) + special.xlogy(1 - p, (1 - p) / (1 - q))

    def _kld_grad(self, a, b):
        p, q = a, b
        da = np.log(p / q) - np.log((1 - p) / (1 - q))
        db = -p / q + (1 - p) / (1 - q)
        return da, db

    def _jeffreys(self, theta):
        p = theta[..., 0]
        return 1.0 / np.sqrt(p * (1 - p))

    def sample_stats(self, theta, n, size, rng):
        theta = np.asarray(theta)
        return np.asarray(rng.binomial(n, theta[..., 0], size=_size_tuple(size, theta)), dtype=float)

    def stats_loglik(self, theta, stats, n):
        p = np.asarray(theta)[..., 0]
        out = special.xlogy(stats, p) + special.xlogy(n - stats, 1 - p)
        return np.where(np.isnan(out), -np.inf, out)

    def stats_of(self, data):
        return float(np.sum(data))


@dataclass(frozen=True)
class GaussianMean(LikelihoodModel):
    """Unknown mean, known noise scale ``sigma`` (shared by every dimension)."""

    sigma: float = 1.0
    dims: int = 1
    kind = "GaussianMean"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.dims < 1:
            raise ValueError("dims must be >= 1")

    @property
    def param_dim(self):
        return self.dims

    @property
    def domain(self):
        return (-np.inf, np.inf)

    def check(self, theta):
        theta = _as_params(theta, self.param_dim)
        if not np.all(np.isfinite(theta)):
            raise DomainError("GaussianMean: non-finite mean")
        return theta

    def _sample(self, theta, n, rng):
        x = theta + self.sigma * rng.standard_normal((n, self.dims))
        return x[:, 0] if self.dims == 1 else x

    def _check_data(self, data):
        data = np.asarray(data, dtype=float)
        return data.reshape(len(data), self.dims) if data.size else data.reshape(0, self.dims)

    def _logpdf(self, theta, data):
        return stats.norm.logpdf(data, theta, self.sigma).sum(axis=-1)

    def _entropy(self, theta):
        return np.full(theta.shape[:-1], self.dims * 0.5 * math.log(2 * math.pi * math.e * self.sigma**2))

    def _kld(self, a, b):
        return np.sum((a - b) ** 2, axis=-1) / (2 * self.sigma**2)

    def _kld_grad(self, a, b):
        d = (a - b) / self.sigma**2
        return d, -d

    def _jeffreys(self, theta):
        return np.ones(theta.shape[:-1])

    def sample_stats(self, theta, n, size, rng):
        # sample mean per dimension; the within-sample scatter is parameter free
        theta = np.asarray(theta)
        return theta + self.sigma / math.sqrt(n) * rng.standard_normal(_size_tuple(size, theta) + (self.dims,))

    def stats_loglik(self, theta, stats, n):
        return -n * np.sum((np.asarray(stats) - np.asarray(theta)) ** 2, axis=-1) / (2 * self.sigma**2)

    def stats_of(self, data):
        return np.mean(self._check_data(data), axis=0)

    def to_dict(self):
        return {"kind": self.kind, "params": {"sigma": self.sigma}, "dims": self.dims}


@dataclass(frozen=True)
class GaussianScale(LikelihoodModel):
    """Unknown per-dimension scale of a diagonal Gaussian with known mean ``mu``."""

    mu: float = 0.0
    dims: int = 1
    kind = "GaussianScale"

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError("dims must be >= 1")

    @property
    def param_dim(self):
        return self.dims

    @property
    def domain(self):
        return (0.0, np.inf)

    def _sample(self, theta, n, rng):
        x = self.mu + theta * rng.standard_normal((n, self.dims))
        return x[:, 0] if self.dims == 1 else x

    def _check_data(self, data):
        data = np.asarray(data, dtype=float)
        return data.reshape(len(data), self.dims) if data.size else data.reshape(0, self.dims)

    def _logpdf(self, theta, data):
        return stats.norm.logpdf(data, self.mu, theta).sum(axis=-1)

    def _entropy(self, theta):
        return np.sum(0.5 * np.log(2 * math.pi * math.e * theta**2), axis=-1)

    def _kld(self, a, b):
        r = a / b
        return np.sum(0.5 * r**2 - np.log(r) - 0.5, axis=-1)

    def _kld_grad(self, a, b):
        return -1 / a + a / b**2, 1 / b - a**2 / b**3

    def pairwise_kld(self, theta):
        # sum_d 0.5 a^2/b^2 - log a + log b - 0.5 as one matrix product
        theta = self.check(np.atleast_2d(theta))
        log_t = np.log(theta).sum(axis=1)
        k = 0.5 * (theta**2) @ (1.0 / theta**2).T - log_t[:, None] + log_t[None, :] - 0.5 * self.dims
        np.fill_diagonal(k, 0.0)
        return np.maximum(k, 0.0)

    def _jeffreys(self, theta):
        return np.prod(1.0 / theta, axis=-1)

    def sample_stats(self, theta, n, size, rng):
        # per-dimension sum of squared deviations from mu
        theta = np.asarray(theta)
        shape = _size_tuple(size, theta) + (self.dims,)
        return theta**2 * rng.chisquare(n, size=shape)

    def stats_loglik(self, theta, stats, n):
        theta = np.asarray(theta)
        return np.sum(-n * np.log(theta) - np.asarray(stats) / (2 * theta**2), axis=-1)

    def pairwise_stats_loglik(self, theta, stats, n):
        theta = np.atleast_2d(theta)
        return -n * np.log(theta).sum(axis=1)[None, :] - np.asarray(stats) @ (0.5 / theta**2).T

    def stats_of(self, data):
        return np.sum((self._check_data(data) - self.mu) ** 2, axis=0)

    def to_dict(self):
        return {"kind": self.kind, "params": {"mu": self.mu}, "dims": self.dims}


@dataclass(frozen=True)
class PoissonRate(LikelihoodModel):
    kind = "PoissonRate"

    @property
    def domain(self):
        return (0.0, np.inf)

    def _check_data(self, data):
        data = np.asarray(data, dtype=float).ravel()
        if np.any((data < 0) | (data != np.floor(data))):
            raise ValueError("Poisson observations must be nonnegative integers")
        return data

    def _sample(self, theta, n, rng):
        return rng.poisson(theta[..., 0], size=n).astype(np.int64)

    def _logpdf(self, theta, data):
        return stats.poisson.logpmf(data, theta[..., 0])

    def _entropy(self, theta):
        lam = theta[..., 0]
        return np.vectorize(_poisson_entropy, otypes=[float])(lam)

    def _kld(self, a, b):
        la, lb = a[..., 0], b[..., 0]
        return la * np.log(la / lb) + lb - la

    def _kld_grad(self, a, b):
        return np.log(a / b), 1 - a / b

    def _jeffreys(self, theta):
        return 1.0 / np.sqrt(theta[..., 0])

    def sample_stats(self, theta, n, size, rng):
        theta = np.asarray(theta)
        return np.asarray(rng.poisson(n * theta[..., 0], size=_size_tuple(size, theta)), dtype=float)

    def stats_loglik(self, theta, stats, n):
        lam = np.asarray(theta)[..., 0]
        return special.xlogy(stats, lam) - n * lam

    def stats_of(self, data):
        return float(np.sum(data))


def _poisson_entropy(lam: float) -> float:
    """Entropy by direct summation, stopping once the neglected tail is below tolerance.

    Past the mode the terms ``-p(k) log p(k)`` are bounded by the remaining mass
    times ``-log p(k)`` (which grows), so the stopping rule uses that product.
    """
    total = 0.0
    k = 0
    log_p = -lam
    while True:
        p = math.exp(log_p)
        total -= p * log_p if p > 0 else 0.0
        k += 1
        log_p += math.log(lam) - math.log(k)
        if k > lam:
            tail = stats.poisson.sf(k - 1, lam)
            if tail * max(-log_p, 1.0) < _POISSON_ENTROPY_TOL:
                return total


_KINDS = {
    "BernoulliMean": BernoulliMean,
    "GaussianMean": GaussianMean,
    "GaussianScale": GaussianScale,
    "PoissonRate": PoissonRate,
}


def model_from_dict(desc: dict[str, Any]) -> LikelihoodModel:
    """Build a model from ``{"kind": ..., "params": {...}, "dims": D}``."""
    try:
        cls = _KINDS[desc["kind"]]
    except KeyError:
        raise ValueError(f"unknown model kind {desc.get('kind')!r}") from None
    params = dict(desc.get("params") or {})
    dims = int(desc.get("dims", 1))
    if cls in (GaussianMean, GaussianScale):
        return cls(dims=dims, **params)
    if dims != 1 or params:
        raise ValueError(f"{cls.kind} takes no params and dims=1")
    return cls()


def model_from_json(text: str) -> LikelihoodModel:
    return model_from_dict(json.loads(text))
