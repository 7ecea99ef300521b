import math

import numpy as np
from scipy import integrate, stats

from refprior.models import BernoulliMean, GaussianMean, GaussianScale, PoissonRate

# lines printed by the acceptance suite, echoed in the terminal summary
ACCEPTANCE: list = []


def central_diff(f, x, h=1e-5):
    """Central finite-difference gradient of scalar ``f`` at flat vector ``x``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def grad_close(analytic, numeric, rel=1e-4, abs_tol=1e-6):
    """Relative error per component, absolute tolerance near zero."""
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    err = np.abs(analytic - numeric)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    return bool(np.all((err <= abs_tol) | (err <= rel * scale)))


# -- brute-force oracles ---------------------------------------------------------


def bernoulli_ce(p, q):
    return -sum(pa * math.log(pb) for pa, pb in ((p, q), (1 - p, 1 - q)))


def poisson_ce(la, lb):
    k = np.arange(0, int(la + 40 * math.sqrt(la) + 60))
    pa = stats.poisson.pmf(k, la)
    return float(-np.sum(pa * stats.poisson.logpmf(k, lb)))


def gauss_ce(mu_a, sa, mu_b, sb):
    f = lambda x: -stats.norm.pdf(x, mu_a, sa) * stats.norm.logpdf(x, mu_b, sb)
    lo, hi = mu_a - 14 * sa, mu_a + 14 * sa
    return integrate.quad(f, lo, hi, epsabs=1e-12, epsrel=1e-12, limit=200, points=[mu_a])[0]


def brute_entropy(model, t):
    if isinstance(model, BernoulliMean):
        return bernoulli_ce(t, t)
    if isinstance(model, PoissonRate):
        return poisson_ce(t, t)
    if isinstance(model, GaussianMean):
        return gauss_ce(t, model.sigma, t, model.sigma)
    return gauss_ce(model.mu, t, model.mu, t)


def brute_kld(model, a, b):
    if isinstance(model, BernoulliMean):
        return bernoulli_ce(a, b) - bernoulli_ce(a, a)
    if isinstance(model, PoissonRate):
        return poisson_ce(a, b) - poisson_ce(a, a)
    if isinstance(model, GaussianMean):
        return gauss_ce(a, model.sigma, b, model.sigma) - gauss_ce(a, model.sigma, a, model.sigma)
    return gauss_ce(model.mu, a, model.mu, b) - gauss_ce(model.mu, a, model.mu, a)


GRIDS = {
    "BernoulliMean": (BernoulliMean(), np.linspace(0.03, 0.97, 20)),
    "GaussianMean": (GaussianMean(), np.linspace(-3.0, 3.0, 20)),
    "GaussianScale": (GaussianScale(), np.geomspace(0.3, 4.0, 20)),
    "PoissonRate": (PoissonRate(), np.geomspace(0.2, 20.0, 20)),
}
