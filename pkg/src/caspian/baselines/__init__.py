"""Comparison-group regressors: naive predictor, linear regression,
Lasso on interaction features, per-location SVR, and Kriging with PCA.

All of them map binary protection vectors straight to depth vectors;
negative outputs are clipped to zero before metric computation via
``clip_negative``.
"""

import numpy as np

from .naive import baseline_predictor, global_mean_depth
from .linear import LinearModel, fit_linear, predict_linear
from .lasso import LassoPolyModel, fit_lasso_poly, poly_expand, select_lambda_cv
from .svr import SvrPerLocation, fit_svr_per_location
from .pca import PcaBasis, fit_pca
from .kriging import KrigingPcaModel, fit_kriging_pca

__all__ = [
    "baseline_predictor",
    "global_mean_depth",
    "LinearModel",
    "fit_linear",
    "predict_linear",
    "LassoPolyModel",
    "fit_lasso_poly",
    "poly_expand",
    "select_lambda_cv",
    "SvrPerLocation",
    "fit_svr_per_location",
    "PcaBasis",
    "fit_pca",
    "KrigingPcaModel",
    "fit_kriging_pca",
    "clip_negative",
]


def clip_negative(pred: np.ndarray) -> np.ndarray:
    """Replace negative depths with zeros (idempotent)."""
    return np.maximum(np.asarray(pred), 0)
