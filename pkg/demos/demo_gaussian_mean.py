"""
The Gaussian-mean divergence
============================

For a location model the reference prior is flat and improper. The bound
keeps growing as the prior spreads out, so the learned normal prior's scale
increases without limit.
"""

import numpy as np

from refprior.infobound import InfoBoundConfig, train_info_bound
from refprior.models import GaussianMean
from refprior.priors import ParametricPrior

prior = ParametricPrior("normal")
cfg = InfoBoundConfig(n_samples=50, iterations=250, batch=100, lr=1e-4, snapshot_every=50)
lam, trace = train_info_bound(GaussianMean(), prior, cfg, np.random.default_rng(3), prior.init_params())
for it, snap in trace.snapshots:
    print(f"iteration {it:3d}: prior scale {np.exp(snap[1]):8.3f}   objective {trace.objective[it - 1]:10.2f}")
