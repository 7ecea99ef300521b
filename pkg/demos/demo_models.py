"""
Likelihood models, divergences and Jeffreys densities
======================================================

Every model exposes closed-form entropy and KL divergence between two
parameter values. Those two quantities drive both training methods.
"""

import numpy as np

from refprior.models import BernoulliMean, GaussianMean, GaussianScale, PoissonRate

# Divergence between two members of each family, per observation.
for model, a, b in [(BernoulliMean(), 0.2, 0.5), (GaussianMean(), 0.0, 1.0), (GaussianScale(), 1.0, 2.0), (PoissonRate(), 2.0, 5.0)]:
    print(f"{model.kind:14s} KL({a} || {b}) = {float(model.kld(a, b)):.4f}   entropy({a}) = {float(model.entropy(a)):.4f}")

# In one dimension the reference prior is the Jeffreys prior.
# The Bernoulli case is the arcsine density; scale and rate models are improper.
theta = np.array([[0.01], [0.1], [0.5]])
print("Bernoulli Jeffreys density:", np.round(np.ravel(BernoulliMean().jeffreys_density(theta)), 3))

# Datasets are reproducible given a generator.
x = PoissonRate().sample_dataset(3.0, 8, np.random.default_rng(0))
print("Poisson draws:", x.tolist(), " log-likelihood at 3:", round(float(PoissonRate().log_likelihood(3.0, x)), 4))
