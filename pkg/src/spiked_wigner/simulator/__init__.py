"""Instance sampling, exact enumeration, quadrature oracle and MCMC."""
from .batch import llr_samples
from .enumeration import (DEFAULT_CAP, EnumerationCapError, LlrResult, PosteriorMoments,
                          exact_llr, posterior_moments, sk_log_partition)
from .instance import Instance, sample_instance
from .mcmc import McmcConfig, mcmc_posterior
from .oracle import OBSERVABLES, tiny_n_expectation_oracle, tiny_n_expectations
from .overlaps import OverlapStats, aggregate_overlaps, posterior_pair_correlations
from .rng import stream

__all__ = [
    "DEFAULT_CAP", "EnumerationCapError", "Instance", "LlrResult", "McmcConfig", "OBSERVABLES",
    "OverlapStats", "PosteriorMoments", "aggregate_overlaps", "exact_llr", "llr_samples",
    "mcmc_posterior", "posterior_moments", "posterior_pair_correlations", "sample_instance",
    "sk_log_partition", "stream", "tiny_n_expectation_oracle", "tiny_n_expectations",
]
