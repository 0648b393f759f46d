"""Sparse projected averaged regression for generalized linear models."""
from .ensemble import (SPAR, MarginalModel, SparConfig, SparModel, coefficient_distribution,
                       load_model, predict, save_model, spar_fit)
from .exceptions import (CalibrationError, ConvergenceWarning, DegenerateResponseError,
                         DegenerateSignalError, DomainError, NumericalError, SaturationWarning,
                         SparError, UndefinedMetricWarning)
from .families import FamilyLink, get_family
from .metrics import auc, msle, mspe, pauc, rmsle, rmspe
from .projection import CwProjection, apply, sample_cw
from .ridge import RidgeGLM, fit_ridge, holp_glm_limit, lambda_path, select_lambda_min
from .screening import ScreeningCoefficient, compute_screening_coefficient, sample_screening_set
from .simulation import simulate

__version__ = "0.1.0"

__all__ = [
    "SPAR", "SparConfig", "SparModel", "MarginalModel", "spar_fit", "predict",
    "coefficient_distribution", "save_model", "load_model",
    "FamilyLink", "get_family",
    "RidgeGLM", "fit_ridge", "lambda_path", "select_lambda_min", "holp_glm_limit",
    "ScreeningCoefficient", "compute_screening_coefficient", "sample_screening_set",
    "CwProjection", "sample_cw", "apply",
    "mspe", "rmspe", "msle", "rmsle", "auc", "pauc",
    "simulate",
    "SparError", "DomainError", "NumericalError", "DegenerateResponseError",
    "DegenerateSignalError", "CalibrationError",
    "ConvergenceWarning", "SaturationWarning", "UndefinedMetricWarning",
]
