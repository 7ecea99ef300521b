"""Amortized Stein variational gradient descent toward the reference prior.

The target's score is approximated by ``grad_theta (N/S) sum_s KL[p(x|theta) || p(x|theta_s)]``
with ``theta_s`` drawn from the current sampler (constant base prior).  The
sampler is regressed onto the SVGD-shifted particles, one AdaM step per update.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .infobound import TrainTrace
from .optim import AdamState, adam_step
from .priors import sample_prior

__all__ = [
    "Kernel",
    "SvgdConfig",
    "kernel_eval",
    "kernel_grad_x",
    "gram",
    "median_heuristic",
    "grad_log_f",
    "svgd_direction",
    "amortized_step",
    "train_svgd",
]

RBF = "rbf"
SOBOLEV01 = "sobolev01"
MEDIAN = "median"

_H_FLOOR = 1e-8


@dataclass(frozen=True)
class Kernel:
    """``rbf``: ``exp(-|x-y|^2 / h)`` with ``h = length_scale`` (or the median
    heuristic).  ``sobolev01``: reproducing kernel of the first-order Sobolev
    space on [0, 1] with ``a = 1 / length_scale``.  ``log_space`` evaluates the
    kernel on ``log x`` (for scale and rate parameters)."""

    kind: str = RBF
    length_scale: float | str = MEDIAN
    log_space: bool = False

    def __post_init__(self):
        if self.kind not in (RBF, SOBOLEV01):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == SOBOLEV01 and (self.length_scale == MEDIAN or self.log_space):
            raise ValueError("sobolev01 needs an explicit length scale and works on (0, 1)")
        if self.length_scale != MEDIAN and not float(self.length_scale) > 0:
            raise ValueError("length scale must be positive")


def median_heuristic(particles) -> float:
    """``h = med^2 / log K`` over pairwise distances, ``log K`` floored at ``log 2``."""
    x = np.asarray(particles, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    K = x.shape[0]
    if K < 2:
        raise ValueError("median heuristic needs at least 2 particles")
    med = np.median(pdist(x))
    return max(med**2 / max(math.log(K), math.log(2)), _H_FLOOR)


def _sobolev_check(x):
    if np.any((x <= 0) | (x >= 1)):
        raise ValueError("sobolev01 kernel is defined on (0, 1) only")


def _sobolev(a, x, y):
    lo, hi = np.minimum(x, y), np.maximum(x, y)
    return np.cosh(a * lo) * np.cosh(a * (1 - hi)) / (a * math.sinh(a))


def _sobolev_dx(a, x, y):
    left = np.sinh(a * x) * np.cosh(a * (1 - y)) / math.sinh(a)  # x < y
    right = -np.cosh(a * y) * np.sinh(a * (1 - x)) / math.sinh(a)  # x > y
    # at x == y the two one-sided slopes are averaged
    mid = np.sinh(a * (2 * x - 1)) / (2 * math.sinh(a))
    return np.where(x < y, left, np.where(x > y, right, mid))


def _bandwidth(kernel: Kernel, u) -> float:
    if kernel.length_scale == MEDIAN:
        return median_heuristic(u)
    return float(kernel.length_scale)


def gram(kernel: Kernel, particles, h: float | None = None):
    """Kernel matrix ``k[a, b] = kappa(x_a, x_b)`` and gradients
    ``g[a, b] = d kappa(x_a, x_b) / d x_a``, both in the particle coordinates."""
    x = np.asarray(particles, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if kernel.kind == SOBOLEV01:
        _sobolev_check(x)
        if x.shape[1] != 1:
            raise ValueError("sobolev01 kernel is one-dimensional")
        a = 1.0 / float(kernel.length_scale)
        xa, xb = x[:, None, 0], x[None, :, 0]
        return _sobolev(a, xa, xb), _sobolev_dx(a, xa, xb)[..., None]
    u = np.log(x) if kernel.log_space else x
    if h is None:
        h = _bandwidth(kernel, u)
    diff = u[:, None, :] - u[None, :, :]
    k = np.exp(-np.sum(diff**2, axis=-1) / h)
    g = -2.0 / h * diff * k[..., None]
    if kernel.log_space:
        g = g / x[:, None, :]
    return k, g


def kernel_eval(kernel: Kernel, x, y, h: float | None = None) -> float:
    x, y = np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))
    if kernel.kind == SOBOLEV01:
        _sobolev_check(np.concatenate([x, y]))
        return float(_sobolev(1.0 / float(kernel.length_scale), x[0], y[0]))
    if h is None:
        if kernel.length_scale == MEDIAN:
            raise ValueError("pass h explicitly when the kernel uses the median heuristic")
        h = float(kernel.length_scale)
    u, v = (np.log(x), np.log(y)) if kernel.log_space else (x, y)
    return float(np.exp(-np.sum((u - v) ** 2) / h))


def kernel_grad_x(kernel: Kernel, x, y, h: float | None = None) -> np.ndarray:
    x, y = np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))
    if kernel.kind == SOBOLEV01:
        _sobolev_check(np.concatenate([x, y]))
        return np.atleast_1d(_sobolev_dx(1.0 / float(kernel.length_scale), x[0], y[0]))
    k = kernel_eval(kernel, x, y, h)
    if h is None:
        h = float(kernel.length_scale)
    if kernel.log_space:
        return -2.0 / h * (np.log(x) - np.log(y)) * k / x
    return -2.0 / h * (x - y) * k


def grad_log_f(model, particles, prior_samples, n_obs: int = 1) -> np.ndarray:
    """Score of the reference-prior functional at each particle (rows of ``particles``)."""
    theta_bar = np.atleast_2d(np.asarray(particles, dtype=float))
    samples = np.atleast_2d(np.asarray(prior_samples, dtype=float))
    if samples.shape[0] < 1:
        raise ValueError("need at least one prior sample")
    ga, _ = model.kld_grad(theta_bar[:, None, :], samples[None, :, :])
    return n_obs * ga.mean(axis=1)


def svgd_direction(particles, kernel: Kernel, grads, h: float | None = None) -> np.ndarray:
    """``phi_j = (1/K) sum_k kappa(x_k, x_j) grad_k + d kappa(x_k, x_j)/d x_k``."""
    x = np.atleast_2d(np.asarray(particles, dtype=float))
    grads = np.asarray(grads, dtype=float).reshape(x.shape)
    K = x.shape[0]
    if K == 1 and kernel.kind == RBF:
        return grads.copy()
    k, g = gram(kernel, x, h)
    return (k.T @ grads + g.sum(axis=0)) / K


def amortized_step(sampler, lam, eps, phi, eta: float, state: AdamState):
    """One AdaM step on ``|g(lam, eps) - stop(theta + eta * phi)|^2``.

    Returns ``(new_lam, new_state, grad)``.
    """
    phi = np.asarray(phi, dtype=float)
    eps = np.atleast_2d(eps)
    if phi.shape != (eps.shape[0], sampler.out_dim):
        raise ValueError(f"phi has shape {phi.shape}, expected {(eps.shape[0], sampler.out_dim)}")
    grad = -2.0 * eta * sampler.vjp(lam, eps, phi)
    delta, state = adam_step(state, grad)
    return np.asarray(lam) + delta, state, grad


@dataclass
class SvgdConfig:
    n_particles: int = 50
    n_samples: int = 50
    n_obs: int = 1
    iterations: int = 250
    batch: int = 100
    lr: float = 1e-4
    eta: float = 0.1

    def validate(self) -> None:
        if self.n_particles < 1 or self.n_samples < 1 or self.n_obs < 1 or self.batch < 1:
            raise ValueError("counts must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if not (self.lr > 0 and self.eta > 0):
            raise ValueError("step sizes must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def train_svgd(model, sampler, kernel: Kernel, cfg: SvgdConfig, rng: np.random.Generator, lam0=None):
    """Fit ``sampler`` so its draws sit at a fixed point of the SVGD update.

    Trace values are ``|eta * phi|^2`` averaged over each iteration's updates.
    """
    cfg.validate()
    lam = sampler.init_params(rng) if lam0 is None else np.array(lam0, dtype=float)
    state = AdamState.zeros(lam.size, lr=cfg.lr)
    trace = TrainTrace()
    start = time.perf_counter()
    for it in range(cfg.iterations):
        values = np.empty(cfg.batch)
        for b in range(cfg.batch):
            particles, eps = sample_prior(sampler, lam, cfg.n_particles, rng)
            samples, _ = sample_prior(sampler, lam, cfg.n_samples, rng)
            if not (np.all(np.isfinite(particles)) and np.all(np.isfinite(samples))):
                raise FloatingPointError(f"non-finite sampler output at iteration {it}")
            score = grad_log_f(model, particles, samples, cfg.n_obs)
            phi = svgd_direction(particles, kernel, score)
            values[b] = float(np.sum((cfg.eta * phi) ** 2))
            lam, state, _ = amortized_step(sampler, lam, eps, phi, cfg.eta, state)
        if not np.all(np.isfinite(lam)):
            raise FloatingPointError(f"non-finite sampler parameters at iteration {it}")
        trace.objective.append(float(values.mean()))
        trace.elapsed_ms.append(1e3 * (time.perf_counter() - start))
    return lam, trace
