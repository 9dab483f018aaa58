"""Principal components of depth vectors, by centered SVD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PcaBasis", "fit_pca"]


@dataclass
class PcaBasis:
    mean: np.ndarray                      # (d_y,)
    components: np.ndarray                # (q, d_y), orthonormal rows
    explained_variance_ratio: np.ndarray  # (q,)

    @property
    def q(self) -> int:
        return self.components.shape[0]

    def project(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=np.float64)
        single = Y.ndim == 1
        if single:
            Y = Y[None, :]
        Z = (Y - self.mean) @ self.components.T
        return Z[0] if single else Z

    def reconstruct(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        single = Z.ndim == 1
        if single:
            Z = Z[None, :]
        Y = Z @ self.components + self.mean
        return Y[0] if single else Y


def fit_pca(Y: np.ndarray, variance_threshold: float = 0.99) -> PcaBasis:
    """Keep the smallest component count whose cumulative explained
    variance reaches the threshold, capped at min(n - 1, rank)."""
    if not (0 < variance_threshold <= 1):
        raise ValueError("variance_threshold must lie in (0, 1]")
    Y = np.asarray(Y, dtype=np.float64)
    n = Y.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples")
    mean = Y.mean(axis=0)
    centered = Y - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    # Drop numerically-zero directions before thresholding.
    rank_tol = s[0] * max(Y.shape) * np.finfo(np.float64).eps if s.size else 0.0
    rank = int((s > rank_tol).sum())
    rank = min(rank, n - 1)
    if rank == 0:
        # Constant data: a single zero-variance direction keeps shapes sane.
        return PcaBasis(mean=mean, components=vt[:1], explained_variance_ratio=np.zeros(1))
    var = s[:rank] ** 2
    ratios = var / var.sum()
    cumulative = np.cumsum(ratios)
    q = int(np.searchsorted(cumulative, variance_threshold - 1e-12) + 1)
    q = min(q, rank)
    return PcaBasis(mean=mean, components=vt[:q], explained_variance_ratio=ratios[:q])
