"""Nonstationary, locally anisotropic Gaussian processes on the sphere.

A covariance family built from Euclidean kernels through chordal
distance, with per-location rotation and scaling on the tangent plane,
plus the machinery around it: Vecchia-approximated likelihoods, adaptive
Metropolis inference, kriging prediction, simulation, and proper scores.
"""

from .covariance import (
    CovarianceModel,
    GammaField,
    ModelKind,
    covariance,
    covariance_matrix,
    local_anisotropy,
    mahalanobis_q,
    matern,
    nonstationary_correlation,
    normalizer_c,
)
from .data import Dataset, load_csv, random_split, region_split, standardize, unstandardize
from .geometry import (
    EuclideanPoint,
    SphericalPoint,
    chordal_distance,
    frame_rotation,
    great_arc_distance,
    rotation,
    to_euclidean,
    to_spherical,
)
from .inference import Chain, make_log_posterior, model_from_raw, posterior_predictive, raw_from_model, run_mcmc
from .scoring import PredictiveMixture, crps_mixture, energy_score, mae, rmse
from .simulate import GridSpec, latlon_grid, sample_gp
from .vecchia import (
    GaussianPredictive,
    VecchiaPlan,
    build_plan,
    exact_loglik,
    joint_predictive_sample,
    joint_predictive_samples,
    maxmin_order,
    nearest_neighbor_sets,
    vecchia_loglik,
    vecchia_predict,
)

__version__ = "0.1.0"

__all__ = [
    "Chain",
    "CovarianceModel",
    "Dataset",
    "EuclideanPoint",
    "GammaField",
    "GaussianPredictive",
    "GridSpec",
    "ModelKind",
    "PredictiveMixture",
    "SphericalPoint",
    "VecchiaPlan",
    "build_plan",
    "chordal_distance",
    "covariance",
    "covariance_matrix",
    "crps_mixture",
    "energy_score",
    "exact_loglik",
    "frame_rotation",
    "great_arc_distance",
    "joint_predictive_sample",
    "joint_predictive_samples",
    "latlon_grid",
    "load_csv",
    "local_anisotropy",
    "mae",
    "mahalanobis_q",
    "make_log_posterior",
    "matern",
    "maxmin_order",
    "model_from_raw",
    "nearest_neighbor_sets",
    "nonstationary_correlation",
    "normalizer_c",
    "posterior_predictive",
    "random_split",
    "raw_from_model",
    "region_split",
    "rmse",
    "rotation",
    "run_mcmc",
    "sample_gp",
    "standardize",
    "to_euclidean",
    "to_spherical",
    "unstandardize",
    "vecchia_loglik",
    "vecchia_predict",
]
