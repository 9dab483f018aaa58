"""L1-regularized regression on degree-2 interaction features.

Features are [1, x_1..x_d, x_i*x_j for i<j] (interaction-only, no
squares). The solver is cyclic coordinate descent on centered data with
an unpenalized intercept, vectorized across the output locations, with
a duality-gap stopping rule. lambda = 0 falls back to exact least
squares on the expanded features.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..scenario import ProtectionScenario

__all__ = ["poly_expand", "LassoPolyModel", "fit_lasso_poly", "select_lambda_cv"]


def poly_expand(x) -> np.ndarray:
    """[1, linear terms, pairwise products i<j]; dimension
    1 + d + d(d-1)/2. Accepts a scenario, a vector, or a matrix."""
    if isinstance(x, ProtectionScenario):
        x = x.as_array()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return _expand_matrix(x[None, :])[0]
    return _expand_matrix(x)


def _expand_matrix(X: np.ndarray) -> np.ndarray:
    n, d = X.shape
    iu, ju = np.triu_indices(d, k=1)
    cols = [np.ones((n, 1)), X, X[:, iu] * X[:, ju]]
    return np.hstack(cols)


@dataclass
class LassoPolyModel:
    intercept: np.ndarray    # (q,)
    coef: np.ndarray         # (p, q) over expanded features minus the bias column
    lam: float
    n_inputs: int
    converged: bool
    final_gap: float

    def predict(self, X) -> np.ndarray:
        Z = poly_expand(X)
        single = Z.ndim == 1
        if single:
            Z = Z[None, :]
        out = Z[:, 1:] @ self.coef + self.intercept
        return out[0] if single else out


def _soft_threshold(rho: np.ndarray, lam: float) -> np.ndarray:
    return np.sign(rho) * np.maximum(np.abs(rho) - lam, 0.0)


def _duality_gap(Z: np.ndarray, Y: np.ndarray, W: np.ndarray, R: np.ndarray, lam_n: float) -> np.ndarray:
    """Per-output gap of (1/2)||y - Zw||^2 + lam_n * ||w||_1."""
    r_norm2 = (R * R).sum(axis=0)
    if lam_n == 0:
        return r_norm2 * 0.0 + np.abs(Z.T @ R).max(axis=0)
    dual_norm = np.abs(Z.T @ R).max(axis=0)
    const = np.minimum(1.0, lam_n / np.maximum(dual_norm, 1e-300))
    a_norm2 = r_norm2 * const * const
    gap = 0.5 * (r_norm2 + a_norm2)
    gap += lam_n * np.abs(W).sum(axis=0)
    gap -= const * (R * Y).sum(axis=0)
    return gap


def fit_lasso_poly(
    X: np.ndarray,
    Y: np.ndarray,
    lam: float,
    tol: float = 1e-6,
    max_iter: int = 2000,
) -> LassoPolyModel:
    """Fit one lasso per output column on the expanded features.

    ``lam`` matches the (1/(2n)) MSE + lam*||w||_1 convention. Stops
    when every output's duality gap drops below tol * ||y_c||^2 or the
    coefficient sweep moves less than tol; warns if max_iter runs out.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, d = X.shape
    Z_full = _expand_matrix(X)
    Z = Z_full[:, 1:]
    p = Z.shape[1]
    q = Y.shape[1]

    if lam == 0.0:
        beta, _, _, _ = np.linalg.lstsq(Z_full, Y, rcond=None)
        model = LassoPolyModel(intercept=beta[0].copy(), coef=beta[1:].copy(), lam=0.0,
                               n_inputs=d, converged=True, final_gap=0.0)
        return model

    z_mean = Z.mean(axis=0)
    y_mean = Y.mean(axis=0)
    Zc = Z - z_mean
    Yc = Y - y_mean
    col_norm2 = (Zc * Zc).sum(axis=0)
    lam_n = lam * n
    W = np.zeros((p, q))
    R = Yc.copy()
    y_scale = np.maximum((Yc * Yc).sum(axis=0), 1e-12)
    converged = False
    gap = np.full(q, np.inf)
    for _ in range(max_iter):
        max_step = 0.0
        for j in range(p):
            if col_norm2[j] <= 1e-300:
                continue
            old = W[j].copy()
            rho = Zc[:, j] @ R + col_norm2[j] * old
            new = _soft_threshold(rho, lam_n) / col_norm2[j]
            delta = old - new
            moved = np.abs(delta).max()
            if moved > 0:
                R += np.outer(Zc[:, j], delta)
                W[j] = new
                max_step = max(max_step, moved)
        if max_step < tol:
            gap = _duality_gap(Zc, Yc, W, R, lam_n)
            if np.all(gap <= tol * y_scale):
                converged = True
                break
    if not converged:
        gap = _duality_gap(Zc, Yc, W, R, lam_n)
        if np.all(gap <= tol * y_scale):
            converged = True
        else:
            warnings.warn(f"lasso coordinate descent hit max_iter={max_iter}; max residual gap {float(np.max(gap)):.3e}")
    intercept = y_mean - z_mean @ W
    return LassoPolyModel(intercept=intercept, coef=W, lam=lam, n_inputs=d,
                          converged=converged, final_gap=float(np.max(gap)))


def lambda_max(X: np.ndarray, Y: np.ndarray) -> float:
    """Smallest lambda that zeroes every coefficient."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    Z = _expand_matrix(X)[:, 1:]
    Zc = Z - Z.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    return float(np.abs(Zc.T @ Yc).max() / X.shape[0])


def select_lambda_cv(
    X: np.ndarray,
    Y: np.ndarray,
    lambdas: np.ndarray | None = None,
    folds: int = 5,
    seed: int = 0,
    tol: float = 1e-5,
    max_iter: int = 500,
) -> float:
    """Pick lambda by K-fold cross-validated MSE on the training data."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    folds = min(folds, n)
    if lambdas is None:
        top = lambda_max(X, Y)
        lambdas = top * np.logspace(-4, -0.5, 8)
    order = np.random.default_rng(seed).permutation(n)
    fold_ids = np.array_split(order, folds)
    scores = []
    for lam in lambdas:
        errors = []
        for hold in fold_ids:
            mask = np.ones(n, dtype=bool)
            mask[hold] = False
            if mask.sum() < 2 or len(hold) == 0:
                continue
            model = fit_lasso_poly(X[mask], Y[mask], float(lam), tol=tol, max_iter=max_iter)
            pred = model.predict(X[hold])
            errors.append(float(((pred - Y[hold]) ** 2).mean()))
        scores.append(np.mean(errors))
    return float(lambdas[int(np.argmin(scores))])
