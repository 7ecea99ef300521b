"""Mutual-information lower bound with the VR-max estimator.

For a batch of prior draws ``theta_1..theta_S`` the objective is

    J = (N / S) * sum_s KL[p(x|theta_s) || p(x|theta_max(s))]

where ``theta_max(s)`` is the draw (other than ``s``) whose likelihood is
largest on data generated from ``theta_s``.  In the default ``analytic_loo``
mode that is the leave-one-out KL nearest neighbour; ``realized_dataset``
draws an actual dataset of ``N`` observations and takes the argmax over all
draws, ``s`` included.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import logsumexp

from .models import LikelihoodModel
from .optim import AdamState, adam_step
from .priors import sample_prior

__all__ = [
    "ANALYTIC_LOO",
    "REALIZED_DATASET",
    "InfoBoundConfig",
    "TrainTrace",
    "select_max_sample",
    "max_indices",
    "jrp_estimate",
    "jrp_gradient",
    "vr_bound",
    "train_info_bound",
]

ANALYTIC_LOO = "analytic_loo"
REALIZED_DATASET = "realized_dataset"
_MODES = (ANALYTIC_LOO, REALIZED_DATASET)


@dataclass
class InfoBoundConfig:
    """Training settings.

    ``batch`` is the number of AdaM updates per iteration, each on a fresh
    draw of ``n_samples`` noise rows; the trace keeps one (averaged) objective
    value per iteration.
    """

    n_samples: int = 50
    n_obs: int = 1
    iterations: int = 250
    batch: int = 100
    lr: float = 1e-4
    max_mode: str = ANALYTIC_LOO
    alpha: float = -math.inf
    snapshot_every: int = 0

    def validate(self) -> None:
        if self.max_mode not in _MODES:
            raise ValueError(f"max_mode must be one of {_MODES}")
        if self.max_mode == ANALYTIC_LOO and self.n_samples < 2:
            raise ValueError("analytic_loo needs at least 2 samples")
        if self.n_samples < 1 or self.iterations < 0 or self.batch < 1 or self.n_obs < 1:
            raise ValueError("counts must be positive (iterations nonnegative)")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.alpha > 0:
            raise ValueError("alpha must be <= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha"] = "-inf" if self.alpha == -math.inf else self.alpha
        return d


@dataclass
class TrainTrace:
    objective: list = field(default_factory=list)
    elapsed_ms: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    def __len__(self):
        return len(self.objective)

    def to_csv(self, with_time: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "objective"] + (["elapsed_ms"] if with_time else []))
        for i, obj in enumerate(self.objective):
            row = [i, f"{obj:.17g}"]
            if with_time:
                row.append(f"{self.elapsed_ms[i]:.3f}")
            w.writerow(row)
        return buf.getvalue()


def max_indices(model: LikelihoodModel, theta, mode: str = ANALYTIC_LOO, n_obs: int = 1, rng=None):
    """``theta_max(s)`` for every row of ``theta`` (ties go to the lowest index)."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    S = theta.shape[0]
    if mode == ANALYTIC_LOO:
        if S < 2:
            raise ValueError("analytic_loo needs at least 2 samples; the bound is 0 otherwise")
        kl = model.pairwise_kld(theta)
        np.fill_diagonal(kl, np.inf)
        return np.argmin(kl, axis=1)
    if mode == REALIZED_DATASET:
        if S < 1:
            raise ValueError("need at least one sample")
        if rng is None:
            raise ValueError("realized_dataset mode needs an rng")
        stats = model.sample_stats(theta, n_obs, None, rng)
        # ll[s, s'] = log p(D_s | theta_s')
        ll = model.pairwise_stats_loglik(theta, stats, n_obs)
        return np.argmax(ll, axis=1)
    raise ValueError(f"unknown mode {mode!r}")


def select_max_sample(model, s: int, theta, mode: str = ANALYTIC_LOO, n_obs: int = 1, rng=None) -> int:
    """Index of ``theta_max`` for the single draw ``s``."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if mode == ANALYTIC_LOO:
        if theta.shape[0] < 2:
            raise ValueError("analytic_loo needs at least 2 samples; the bound is 0 otherwise")
        kl = model.kld(theta[s], theta)
        kl[s] = np.inf
        return int(np.argmin(kl))
    if mode == REALIZED_DATASET:
        if rng is None:
            raise ValueError("realized_dataset mode needs an rng")
        stats = model.sample_stats(theta[s], n_obs, None, rng)
        return int(np.argmax(model.stats_loglik(theta, stats, n_obs)))
    raise ValueError(f"unknown mode {mode!r}")


def jrp_estimate(model, theta, n_obs: int = 1, mode: str = ANALYTIC_LOO, rng=None, idx=None) -> float:
    """Monte Carlo bound: mean dataset-level KL from each draw to its ``theta_max``."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if idx is None:
        idx = max_indices(model, theta, mode, n_obs, rng)
    return float(n_obs * np.mean(model.kld(theta, theta[idx])))


def jrp_gradient(model, prior, lam, eps, n_obs: int = 1, mode: str = ANALYTIC_LOO, rng=None):
    """Value and gradient over ``lam`` of :func:`jrp_estimate` on ``prior.transform(lam, eps)``.

    The ``theta_max`` assignment is held fixed; gradient flows through both
    arguments of every KL term.
    """
    theta = prior.transform(lam, eps)
    bad = np.flatnonzero(~np.all(np.isfinite(theta), axis=1))
    if bad.size:
        raise FloatingPointError(f"non-finite prior sample at index {int(bad[0])}")
    S = theta.shape[0]
    idx = max_indices(model, theta, mode, n_obs, rng)
    value = float(n_obs * np.mean(model.kld(theta, theta[idx])))
    ga, gb = model.kld_grad(theta, theta[idx])
    g_theta = np.array(ga, dtype=float)
    np.add.at(g_theta, idx, gb)
    g_theta *= n_obs / S
    bad = np.flatnonzero(~np.all(np.isfinite(g_theta), axis=1))
    if bad.size:
        raise FloatingPointError(f"non-finite objective gradient at sample {int(bad[0])}")
    return value, prior.vjp(lam, eps, g_theta)


def vr_bound(model, data, theta, alpha: float = -math.inf) -> float:
    """Monte Carlo Renyi upper bound on ``log p(D)`` from prior draws ``theta``.

    ``alpha = -inf`` gives the VR-max estimator ``max_s log p(D|theta_s)``.
    """
    if alpha > 0 or np.isnan(alpha):
        raise ValueError("alpha must be <= 0")
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    ll = np.array([model.log_likelihood(t, data) for t in theta])
    if alpha == -math.inf:
        return float(ll.max())
    r = 1.0 - alpha
    return float((logsumexp(r * ll) - math.log(len(ll))) / r)


def train_info_bound(model, prior, cfg: InfoBoundConfig, rng: np.random.Generator, lam0=None):
    """Ascend the bound with AdaM.  Returns ``(lam, trace)``."""
    cfg.validate()
    lam = prior.init_params(rng) if lam0 is None else np.array(lam0, dtype=float)
    state = AdamState.zeros(lam.size, lr=cfg.lr)
    trace = TrainTrace()
    start = time.perf_counter()
    for it in range(cfg.iterations):
        values = np.empty(cfg.batch)
        for b in range(cfg.batch):
            _, eps = sample_prior(prior, lam, cfg.n_samples, rng)
            values[b], grad = jrp_gradient(model, prior, lam, eps, cfg.n_obs, cfg.max_mode, rng)
            if not math.isfinite(values[b]):
                raise FloatingPointError(f"non-finite objective at iteration {it}")
            delta, state = adam_step(state, -grad)
            lam = lam + delta
        trace.objective.append(float(values.mean()))
        trace.elapsed_ms.append(1e3 * (time.perf_counter() - start))
        if cfg.snapshot_every and (it + 1) % cfg.snapshot_every == 0:
            trace.snapshots.append((it + 1, lam.copy()))
    return lam, trace
