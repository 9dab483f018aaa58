"""Ordinary least squares with intercept, one solve for all outputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LinearModel", "fit_linear", "predict_linear"]


@dataclass
class LinearModel:
    intercept: np.ndarray  # (q,)
    coef: np.ndarray       # (d, q)
    rank: int
    n_features: int

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.n_features + 1


def fit_linear(X: np.ndarray, Y: np.ndarray) -> LinearModel:
    """Least squares per output via SVD; minimum-norm under rank
    deficiency."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y row counts differ")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    design = np.hstack([np.ones((X.shape[0], 1)), X])
    beta, _, rank, _ = np.linalg.lstsq(design, Y, rcond=None)
    return LinearModel(intercept=beta[0], coef=beta[1:], rank=int(rank), n_features=X.shape[1])


def predict_linear(model: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    out = X @ model.coef + model.intercept
    return out[0] if single else out
