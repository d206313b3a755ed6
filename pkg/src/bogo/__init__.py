"""bogo: Bayesian-optimization campaigns for expensive black-box experiments.

Gaussian-process surrogates with expected-improvement and
knowledge-gradient sampling policies, wrapped in a persistent ask/tell
service.
"""

from .acquisition import (
    Acquisition,
    LinearEnsemble,
    Policy,
    ei_over_posterior,
    expected_improvement,
    expected_max_linear,
    knowledge_gradient,
    maximize_acquisition,
    sigma_tilde,
)
from .campaign import CampaignConfig, CampaignState, Suggestion, ask, create, posterior_curve, tell
from .diagnostics import DiagnosticReport, LooRecord, loo_diagnose, report_to_table
from .domains import Box, FiniteSet
from .gp import GpPosterior, JointPrediction, TrainingSet, fit, log_marginal_likelihood, predict, predict_joint
from .hyperfit import FitResult, ProfiledState, fit_hyperparameters, mu_hat, reduced_lml, sigma2_hat
from .kernels import (
    KernelFamily,
    KernelSpec,
    MeanSpec,
    kernel_eval,
    kernel_matrix,
    matern_eval,
    mean_eval,
    polynomial_basis,
)
from .mvn import CholeskyFactor, MvnDistribution, block_inverse, cholesky, condition, solve_triangular
from .store import CampaignStore

__version__ = "0.1.0"

__all__ = [
    "Acquisition",
    "Box",
    "CampaignConfig",
    "CampaignState",
    "CampaignStore",
    "CholeskyFactor",
    "DiagnosticReport",
    "FiniteSet",
    "FitResult",
    "GpPosterior",
    "JointPrediction",
    "KernelFamily",
    "KernelSpec",
    "LinearEnsemble",
    "LooRecord",
    "MeanSpec",
    "MvnDistribution",
    "Policy",
    "ProfiledState",
    "Suggestion",
    "TrainingSet",
    "ask",
    "block_inverse",
    "cholesky",
    "condition",
    "create",
    "ei_over_posterior",
    "expected_improvement",
    "expected_max_linear",
    "fit",
    "fit_hyperparameters",
    "kernel_eval",
    "kernel_matrix",
    "knowledge_gradient",
    "log_marginal_likelihood",
    "loo_diagnose",
    "matern_eval",
    "maximize_acquisition",
    "mean_eval",
    "mu_hat",
    "polynomial_basis",
    "posterior_curve",
    "predict",
    "predict_joint",
    "reduced_lml",
    "report_to_table",
    "sigma2_hat",
    "sigma_tilde",
    "solve_triangular",
    "tell",
]
