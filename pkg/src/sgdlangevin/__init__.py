"""Langevin Monte Carlo and SGD-as-sampler with Wasserstein-2 guarantees."""

from .errors import InfeasiblePlan, InvalidArgument, NumericFailure, ResourceLimit, UnsupportedTarget
from .metrics import w2_empirical, w2_empirical_vs_gaussian, w2_gaussian
from .oracles import (AffineChainSpec, gaussian_chain_law, isotropic_noise_variance,
                      subset_estimator_variance_bruteforce, subset_estimator_variance_formula)
from .planner import (Plan, best_plan, lmc_bound_first_order, lmc_bound_second_order, plan_lmc,
                      plan_sgd_first_order, plan_sgd_second_order, w0_upper_bound)
from .potentials import (DecomposableTarget, GaussianLaw, make_isotropic_gaussian_target,
                         make_ridge_target, target_from_dict, validate_constants)
from .samplers import (ChainState, SamplerConfig, lmc_step, noise_covariance, run_chain, run_chains,
                       sgd_idealized_step, sgd_minibatch_step)

__version__ = "0.1.0"
