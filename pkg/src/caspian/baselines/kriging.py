"""Universal Kriging on PCA latents.

Dimensionality reduction first: depth vectors are projected onto a PCA
basis, one Gaussian process is fitted per latent component (linear
trend, anisotropic squared-exponential correlation), and predictions
are mapped back through the basis. Length-scales and process variance
come from maximizing the concentrated log-likelihood with a bounded
multi-start search. Ill-conditioned correlation matrices get a nugget
escalating from 1e-10 by factors of 10 up to 1e-6 before fitting fails.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .pca import PcaBasis, fit_pca

__all__ = ["KrigingError", "KrigingComponent", "KrigingPcaModel", "fit_kriging_pca"]

NUGGET_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
DEFAULT_BOUNDS = (1e-2, 1e2)
DEFAULT_STARTS = 8


class KrigingError(RuntimeError):
    """Correlation matrix could not be factorized even with the maximum
    nugget, or the model is otherwise degenerate."""


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Per-dimension squared differences, shape (len(A), len(B), d)."""
    return (A[:, None, :] - B[None, :, :]) ** 2


def _correlation(sqd: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * (sqd / (lengthscales ** 2)).sum(axis=2))


def _chol_with_nugget(R: np.ndarray) -> tuple[np.ndarray, float]:
    for nugget in NUGGET_LADDER:
        try:
            L = cholesky(R + nugget * np.eye(R.shape[0]), lower=True)
            return L, nugget
        except np.linalg.LinAlgError:
            continue
    raise KrigingError("correlation matrix is singular even with nugget 1e-6")


def _trend(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


@dataclass
class KrigingComponent:
    """One GP over a single latent output."""

    X: np.ndarray
    lengthscales: np.ndarray
    sigma2: float
    beta: np.ndarray
    alpha: np.ndarray  # R^{-1} (y - F beta)
    nugget: float

    def predict(self, Xq: np.ndarray) -> np.ndarray:
        r = _correlation(_sq_dists(np.asarray(Xq, dtype=np.float64), self.X), self.lengthscales)
        return _trend(np.asarray(Xq, dtype=np.float64)) @ self.beta + r @ self.alpha


def _concentrated_nll(log_ls: np.ndarray, sqd: np.ndarray, F: np.ndarray, y: np.ndarray, y_var: float) -> float:
    n = y.shape[0]
    R = _correlation(sqd, np.exp(log_ls))
    try:
        L, _ = _chol_with_nugget(R)
    except KrigingError:
        return 1e12
    F_t = solve_triangular(L, F, lower=True)
    y_t = solve_triangular(L, y, lower=True)
    beta, _, _, _ = np.linalg.lstsq(F_t, y_t, rcond=None)
    resid = y_t - F_t @ beta
    sigma2 = float(resid @ resid) / n
    sigma2 = max(sigma2, 1e-12 * y_var + 1e-300)
    log_det = 2.0 * float(np.log(np.diag(L)).sum())
    return n * math.log(sigma2) + log_det


def _fit_component(
    X: np.ndarray,
    y: np.ndarray,
    bounds: tuple[float, float],
    n_starts: int,
    rng: np.random.Generator,
) -> KrigingComponent:
    n, d = X.shape
    sqd = _sq_dists(X, X)
    F = _trend(X)
    y_var = float(np.var(y)) or 1.0
    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    starts = [np.full(d, math.log(s)) for s in (0.3, 1.0, 3.0)][: max(1, n_starts)]
    while len(starts) < n_starts:
        starts.append(rng.uniform(lo, hi, size=d))
    best = None
    for x0 in starts:
        res = optimize.minimize(
            _concentrated_nll, x0, args=(sqd, F, y, y_var),
            method="L-BFGS-B", bounds=[(lo, hi)] * d,
        )
        if best is None or res.fun < best.fun:
            best = res
    lengthscales = np.exp(best.x)
    R = _correlation(sqd, lengthscales)
    L, nugget = _chol_with_nugget(R)
    F_t = solve_triangular(L, F, lower=True)
    y_t = solve_triangular(L, y, lower=True)
    beta, _, _, _ = np.linalg.lstsq(F_t, y_t, rcond=None)
    resid_t = y_t - F_t @ beta
    sigma2 = float(resid_t @ resid_t) / n
    alpha = cho_solve((L, True), y - F @ beta)
    return KrigingComponent(X=X.copy(), lengthscales=lengthscales, sigma2=sigma2,
                            beta=beta, alpha=alpha, nugget=nugget)


@dataclass
class KrigingPcaModel:
    basis: PcaBasis
    components: list[KrigingComponent]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        Z = np.column_stack([c.predict(X) for c in self.components])
        out = self.basis.reconstruct(Z)
        return out[0] if single else out


def fit_kriging_pca(
    X: np.ndarray,
    Y: np.ndarray,
    pca_threshold: float = 0.99,
    lengthscale_bounds: tuple[float, float] = DEFAULT_BOUNDS,
    n_starts: int = DEFAULT_STARTS,
    seed: int = 0,
) -> KrigingPcaModel:
    """PCA on the targets, then one GP per retained component."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n, d = X.shape
    if n < d + 2:
        warnings.warn(f"kriging with only {n} samples for {d} inputs; trend fit may be rank-deficient")
    if len(np.unique(X, axis=0)) != n:
        raise KrigingError("duplicate training inputs make the correlation matrix singular")
    basis = fit_pca(Y, pca_threshold)
    Z = basis.project(Y)
    rng = np.random.default_rng(seed)
    components = [
        _fit_component(X, Z[:, c], lengthscale_bounds, n_starts, rng)
        for c in range(basis.q)
    ]
    return KrigingPcaModel(basis=basis, components=components)
