"""Projection pursuit, sufficient dimension reduction and sparse robust M estimators."""

from .dicomo import MomentSpec, capi, comoment, continuum, dcor, dcov, dcov_sq, mdd, moment
from .errors import (
    ConvergenceError,
    DataError,
    DimRedError,
    IndexEvaluationError,
    NumericalError,
    RankError,
    ZeroScaleError,
)
from .modelselect import CVPlan, grid_search, kfold, robust_loss
from .models import ProjectionModel
from .ppdire import PPSpec, fit_pp, grid_maximize, nlp_maximize
from .preprocess import (
    FittedScaler,
    ScalerSpec,
    SignSpec,
    fit_scaler,
    fit_spatial_sign,
    gen_spatial_sign,
    locate,
    scale_est,
    spatial_median,
)
from .serialize import load, save
from .sprm import RhoSpec, RMModel, SprmSpec, caseweight_classes, rm_fit, snipls_fit, sprm_fit, weight
from .sudire import SDRModel, SDRSpec, estimate_dimension, fit_sdr, maximize_dependence, slice_kernel

__version__ = "0.1.0"

__all__ = [
    "CVPlan", "ConvergenceError", "DataError", "DimRedError", "FittedScaler", "IndexEvaluationError",
    "MomentSpec", "NumericalError", "PPSpec", "ProjectionModel", "RMModel", "RankError", "RhoSpec",
    "SDRModel", "SDRSpec", "ScalerSpec", "SignSpec", "SprmSpec", "ZeroScaleError", "capi",
    "caseweight_classes", "comoment", "continuum", "dcor", "dcov", "dcov_sq", "estimate_dimension",
    "fit_pp", "fit_scaler", "fit_sdr", "fit_spatial_sign", "gen_spatial_sign", "grid_maximize",
    "grid_search", "kfold", "load", "locate", "maximize_dependence", "mdd", "moment", "nlp_maximize",
    "rm_fit", "robust_loss", "save", "scale_est", "slice_kernel", "snipls_fit", "spatial_median",
    "sprm_fit", "weight",
]
