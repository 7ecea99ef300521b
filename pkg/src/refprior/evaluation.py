"""Kolmogorov-Smirnov comparison of prior approximations with the true reference prior."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .baselines import DiscreteGridDistribution, _check_bounds

__all__ = [
    "KsResult",
    "ecdf",
    "ks_statistic",
    "ks_threshold",
    "ks_test",
    "true_rp_sampler",
    "ksd_curve",
    "curve_to_csv",
]


@dataclass(frozen=True)
class KsResult:
    statistic: float
    n: int
    m: int
    threshold: float

    @property
    def reject(self) -> bool:
        return self.statistic > self.threshold


def _as_1d(samples, name="samples") -> np.ndarray:
    x = np.asarray(samples, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError(f"{name} must be scalar draws")
    if x.size == 0:
        raise ValueError(f"{name} is empty")
    return x


def ecdf(samples):
    """Right-continuous empirical CDF of ``samples`` as a vectorized callable."""
    x = np.sort(_as_1d(samples))
    n = x.size

    def F(t):
        return np.searchsorted(x, t, side="right") / n

    return F


def ks_statistic(a, b) -> float:
    """``sup_x |F_a(x) - F_b(x)|``, exact.

    Both step functions only change at sample points, so evaluating the gap at
    every merged point (right limits) covers the supremum.  Multivariate draws
    are compared per dimension and the largest statistic is returned.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.ndim == 2 and a.shape[1] > 1:
        if b.ndim != 2 or b.shape[1] != a.shape[1]:
            raise ValueError("dimension mismatch")
        return max(ks_statistic(a[:, d], b[:, d]) for d in range(a.shape[1]))
    a, b = np.sort(_as_1d(a, "a")), np.sort(_as_1d(b, "b"))
    z = np.concatenate([a, b])
    fa = np.searchsorted(a, z, side="right") / a.size
    fb = np.searchsorted(b, z, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_threshold(n: int, m: int, alpha: float = 0.05) -> float:
    """Asymptotic two-sample critical value ``c(alpha) * sqrt((n + m) / (n m))``."""
    if n < 1 or m < 1:
        raise ValueError("sample sizes must be >= 1")
    c = math.sqrt(-0.5 * math.log(alpha / 2))
    return c * math.sqrt((n + m) / (n * m))


def ks_test(a, b, alpha: float = 0.05) -> KsResult:
    n, m = len(a), len(b)
    return KsResult(ks_statistic(a, b), n, m, ks_threshold(n, m, alpha))


def true_rp_sampler(model, bounds, G: int = 1000) -> DiscreteGridDistribution:
    """Jeffreys density on ``G`` evenly spaced points across ``bounds``, normalized.

    Endpoints carry half weight (trapezoid rule) so grid masses of subintervals
    track the integral of the density.
    """
    lo, hi = _check_bounds(bounds)
    if model.param_dim != 1:
        raise ValueError("grid sampling is one-dimensional")
    if G < 2:
        raise ValueError("need at least 2 grid points")
    points = np.linspace(lo, hi, G)
    logw = np.log(model.jeffreys_density(points[:, None]))
    logw[[0, -1]] -= math.log(2)
    return DiscreteGridDistribution(points, logw)


def ksd_curve(method_samples: dict, truth, sizes, rng=None, alpha: float = 0.05) -> list[dict]:
    """KS distance of each method's first ``n`` draws against ``n`` truth draws.

    ``truth`` is either something with ``.sample(n, rng)`` (fresh draws per
    size) or an array whose first ``n`` rows are used.
    """
    sizes = [int(n) for n in sizes]
    need = max(sizes)
    for name, s in method_samples.items():
        if len(s) < need:
            raise ValueError(f"method {name!r} has {len(s)} samples, needs {need}")
    rows = []
    for n in sizes:
        if hasattr(truth, "sample"):
            ref = truth.sample(n, rng)
        else:
            if len(truth) < n:
                raise ValueError(f"truth has {len(truth)} samples, needs {n}")
            ref = np.asarray(truth)[:n]
        thr = ks_threshold(n, n, alpha)
        for name, s in method_samples.items():
            rows.append({"method": name, "n": n, "ksd": ks_statistic(np.asarray(s)[:n], ref), "threshold": thr})
    return rows


def curve_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "n", "ksd", "threshold"])
    for r in rows:
        w.writerow([r["method"], r["n"], f"{r['ksd']:.17g}", f"{r['threshold']:.17g}"])
    return buf.getvalue()
