"""Modularity statistics for stochastic blockmodel graphs: asymptotic
moments, hypothesis tests, simulation and preprocessing tools."""

__version__ = "0.1.0"

from .asymptotics import AsymptoticMoments, Regime, all_moments, moments, nu_factorization
from .embedding import adjusted_rand_index, estimate_rank, kmeans, spectral_embed
from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    ModnetError,
    NumericalError,
    ParseError,
    TheoremInapplicableError,
)
from .inference import PowerSpec, analytic_power_L, analytic_power_S, modularity_test
from .modularity import louvain, modularity_triplet, q_likelihood, q_newman_girvan, q_residual, q_spectral
from .models import SbmParams, sample_memberships, sample_sbm

__all__ = [
    "__version__",
    "AsymptoticMoments",
    "Regime",
    "all_moments",
    "moments",
    "nu_factorization",
    "adjusted_rand_index",
    "estimate_rank",
    "kmeans",
    "spectral_embed",
    "ConfigError",
    "DimensionError",
    "DomainError",
    "ModnetError",
    "NumericalError",
    "ParseError",
    "TheoremInapplicableError",
    "PowerSpec",
    "analytic_power_L",
    "analytic_power_S",
    "modularity_test",
    "louvain",
    "modularity_triplet",
    "q_likelihood",
    "q_newman_girvan",
    "q_residual",
    "q_spectral",
    "SbmParams",
    "sample_memberships",
    "sample_sbm",
]
