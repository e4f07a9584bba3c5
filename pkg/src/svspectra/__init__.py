"""Spectra of heavy-tailed stochastic volatility sample covariance matrices."""
from .limits import LimitLaw, frechet_cdf, hill_estimator, ks_distance, large_deviation_ratio, mean_measure
from .model import DataMatrix, DependenceMatrix, assemble, make_band_matrix, nb_statistic
from .normalization import a_sequence, b_sequence, centering, dimension_rule, normalization_constants
from .sampling import (
    DegenerateVolatility,
    MixingVolatility,
    NoiseSpec,
    ThinnedVolatility,
    derive_subseed,
    sample_noise,
    sample_volatility,
)
from .spectra import eigenvalues_sym, eigenvector_error, sample_covariance, top_eigenpairs

__all__ = [
    "LimitLaw", "frechet_cdf", "hill_estimator", "ks_distance", "large_deviation_ratio", "mean_measure",
    "DataMatrix", "DependenceMatrix", "assemble", "make_band_matrix", "nb_statistic",
    "a_sequence", "b_sequence", "centering", "dimension_rule", "normalization_constants",
    "DegenerateVolatility", "MixingVolatility", "NoiseSpec", "ThinnedVolatility", "derive_subseed",
    "sample_noise", "sample_volatility",
    "eigenvalues_sym", "eigenvector_error", "sample_covariance", "top_eigenpairs",
]
__version__ = "0.1.0"
