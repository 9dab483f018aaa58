"""Per-location linear epsilon-insensitive support vector regression.

One independent model per output location, backed by scikit-learn's
libsvm SVR with a linear kernel (tolerance tightened to 1e-4).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.svm import SVR

__all__ = ["SvrPerLocation", "fit_svr_per_location"]


@dataclass
class SvrPerLocation:
    models: list[SVR]
    C: float
    epsilon: float

    @property
    def n_outputs(self) -> int:
        return len(self.models)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        out = np.column_stack([m.predict(X) for m in self.models])
        return out[0] if single else out


def fit_svr_per_location(X: np.ndarray, Y: np.ndarray, C: float = 5.0, epsilon: float = 0.05,
                         tol: float = 1e-4) -> SvrPerLocation:
    if C <= 0 or epsilon < 0:
        raise ValueError("C must be positive and epsilon >= 0")
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    models = []
    for col in range(Y.shape[1]):
        svr = SVR(kernel="linear", C=C, epsilon=epsilon, tol=tol)
        svr.fit(X, Y[:, col])
        models.append(svr)
    return SvrPerLocation(models=models, C=C, epsilon=epsilon)
