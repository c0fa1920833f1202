"""Determinantal point processes with separable kernels and their coordinate projections."""

from .errors import DPPError
from .kernels import (
    Family,
    IndexSet,
    SeparableKernel,
    Spectrum1D,
    balanced_factorization,
    dirichlet_spectrum,
    gaussian_spectrum,
    kappa,
    l1exp_spectrum,
    poisson_reference,
)
from .patterns import PointPattern, project
from .sampler import SpectralSampler, sample_dpp, sample_poisson
from .summaries import (
    SummaryCurve,
    empirical_ripley,
    laplace_projected,
    pcf_projected,
    rho2_alpha_det,
    ripley_envelope,
    ripley_projected,
)
from .quadrature import ExperimentConfig, analytic_variance, bump, run_experiment, true_integral

__all__ = [
    "DPPError", "Family", "IndexSet", "SeparableKernel", "Spectrum1D", "balanced_factorization",
    "dirichlet_spectrum", "gaussian_spectrum", "kappa", "l1exp_spectrum", "poisson_reference",
    "PointPattern", "project", "SpectralSampler", "sample_dpp", "sample_poisson", "SummaryCurve",
    "empirical_ripley", "laplace_projected", "pcf_projected", "rho2_alpha_det", "ripley_envelope",
    "ripley_projected", "ExperimentConfig", "analytic_variance", "bump", "run_experiment", "true_integral",
]
