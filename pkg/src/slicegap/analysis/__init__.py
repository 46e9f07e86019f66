from slicegap.analysis.bounds import mixing_iterations, tv_bound
from slicegap.analysis.classify import (
    LambdaCriterionConflict,
    LambdaReport,
    build_rho_tilde,
    classify_lambda,
    min_lambda_k,
    psi,
)
from slicegap.analysis.kernel import DiscretizedKernel, GapEstimate, discretize_Q, spectral_gap
from slicegap.analysis.wasserstein import (
    Estimate,
    kernel_mean_norm,
    wasserstein_coupling_ub,
    wasserstein_dual_lb,
)

__all__ = [
    "DiscretizedKernel",
    "Estimate",
    "GapEstimate",
    "LambdaCriterionConflict",
    "LambdaReport",
    "build_rho_tilde",
    "classify_lambda",
    "discretize_Q",
    "kernel_mean_norm",
    "min_lambda_k",
    "mixing_iterations",
    "psi",
    "spectral_gap",
    "tv_bound",
    "wasserstein_coupling_ub",
    "wasserstein_dual_lb",
]
