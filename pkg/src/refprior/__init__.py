"""Learned approximations of reference priors.

Two training methods (a mutual-information lower bound with the VR-max
estimator, and amortized Stein variational gradient descent), two numerical
baselines, and Kolmogorov-Smirnov evaluation against known Jeffreys priors.
"""
from .baselines import (
    BergerConfig,
    DiscreteGridDistribution,
    McmcConfig,
    berger_grid_sampler,
    berger_log_prior_at,
    lw_mcmc,
    uniform_sampler,
)
from .evaluation import KsResult, ecdf, ks_statistic, ks_test, ks_threshold, ksd_curve, true_rp_sampler
from .infobound import InfoBoundConfig, TrainTrace, jrp_estimate, jrp_gradient, select_max_sample, train_info_bound, vr_bound
from .models import (
    LOG_ZERO,
    BernoulliMean,
    DomainError,
    GaussianMean,
    GaussianScale,
    LikelihoodModel,
    PoissonRate,
    model_from_dict,
)
from .optim import AdamState, adam_step
from .priors import ImplicitSampler, ParametricPrior, init_sampler, prior_from_dict, prior_to_dict, sample_prior
from .svgd import Kernel, SvgdConfig, grad_log_f, svgd_direction, train_svgd

__version__ = "0.1.0"
