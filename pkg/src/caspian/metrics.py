"""Masked Huber training loss and the six evaluation metrics.

All metrics aggregate as a mean of per-sample values, and each carries a
per-sample standard deviation alongside. Depth vectors are ordered by
location id, matching the grid codec.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .gridcodec import InundationMap

__all__ = ["HuberConfig", "MetricsReport", "huber_loss", "compute_metrics", "ZERO_DEPTH_TOLERANCE"]

# Predicted depths within this of zero count as "dry" for Acc[0]; the
# model's final ReLU emits exact zeros, so this only guards float noise.
ZERO_DEPTH_TOLERANCE = 1e-6

DEFAULT_DELTAS = (0.5, 0.1)


@dataclass(frozen=True)
class HuberConfig:
    """Quadratic-to-linear crossover threshold, in meters."""

    theta: float = 0.5

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be >= 0")


def huber_values(delta: np.ndarray, theta: float) -> np.ndarray:
    """Elementwise Huber: 0.5*d^2 below theta, theta*|d| - 0.5*theta^2 above."""
    a = np.abs(delta)
    return np.where(a <= theta, 0.5 * delta * delta, theta * a - 0.5 * theta * theta)


def huber_loss(pred: InundationMap, target: InundationMap, cfg: HuberConfig = HuberConfig()) -> float:
    """Mean Huber loss over the valid (masked) cells only."""
    if pred.grid.shape != target.grid.shape:
        raise ValueError("prediction and target shapes differ")
    if not np.array_equal(pred.mask, target.mask):
        raise ValueError("prediction and target masks differ")
    if not pred.mask.any():
        raise ValueError("empty mask: no valid cells to evaluate")
    delta = pred.grid.astype(np.float64) - target.grid.astype(np.float64)
    values = huber_values(delta, cfg.theta)
    return float(values[pred.mask].mean())


def _delta_key(delta: float) -> str:
    return "delta_gt_" + str(delta).replace(".", "_")


@dataclass
class MetricsReport:
    """Aggregated evaluation metrics over N samples.

    ``acc0`` is dry-location accuracy: among locations with true depth
    zero, the fraction predicted within ZERO_DEPTH_TOLERANCE of zero.
    ``acc0_literal`` is the ground-truth-only variant (fraction of
    locations with true depth zero), kept for audit.
    """

    amae: float
    armse: float
    artae: float
    delta_exceed: dict[float, float]
    r2: float
    acc0: float
    acc0_literal: float
    n_samples: int
    std: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "amae": self.amae,
            "armse": self.armse,
            "artae": self.artae,
            "r2": self.r2,
            "acc0": self.acc0,
            "acc0_literal": self.acc0_literal,
            "n_samples": self.n_samples,
        }
        for delta, value in self.delta_exceed.items():
            out[_delta_key(delta)] = value
        out["std"] = dict(self.std)
        return out


def _mean_or_skip(values: list[float], metric: str) -> tuple[float, float]:
    if not values:
        warnings.warn(f"no sample was eligible for {metric}; reporting nan")
        return float("nan"), float("nan")
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def compute_metrics(
    preds: list[np.ndarray],
    targets: list[np.ndarray],
    deltas: tuple[float, ...] = DEFAULT_DELTAS,
) -> MetricsReport:
    """Mean-over-samples AMAE / ARMSE / ARTAE / delta-exceedance / R2 /
    dry-location accuracy.

    Samples that make a term undefined (zero ||y||_1 for ARTAE, zero
    variance for R2, no true zeros for Acc[0]) are skipped from that
    term with a warning.
    """
    if len(preds) != len(targets):
        raise ValueError("prediction and target counts differ")
    if not preds:
        raise ValueError("no samples to evaluate")
    mae, rmse, artae, r2, acc0, acc0_lit = [], [], [], [], [], []
    exceed: dict[float, list[float]] = {d: [] for d in deltas}
    for k, (yhat, y) in enumerate(zip(preds, targets)):
        yhat = np.asarray(yhat, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if yhat.shape != y.shape:
            raise ValueError(f"sample {k}: prediction length {yhat.shape} != target length {y.shape}")
        if (y < 0).any():
            raise ValueError(f"sample {k}: negative ground-truth depth")
        d_y = y.size
        err = y - yhat
        abs_err = np.abs(err)
        mae.append(float(abs_err.mean()))
        rmse.append(float(np.sqrt((err ** 2).mean())))
        l1 = abs_err.sum()
        norm = np.abs(y).sum()
        if norm > 0:
            artae.append(float(l1 / norm))
        else:
            warnings.warn(f"sample {k}: ||y||_1 = 0, skipping its ARTAE term")
        for d in deltas:
            exceed[d].append(float((abs_err > d).sum() / d_y))
        sst = float(((y - y.mean()) ** 2).sum())
        if sst > 0:
            r2.append(1.0 - float((err ** 2).sum()) / sst)
        else:
            warnings.warn(f"sample {k}: zero variance target, skipping its R2 term")
        zeros = y == 0
        acc0_lit.append(float(zeros.sum() / d_y))
        if zeros.any():
            acc0.append(float((np.abs(yhat[zeros]) <= ZERO_DEPTH_TOLERANCE).sum() / zeros.sum()))
        else:
            warnings.warn(f"sample {k}: no zero-depth locations, skipping its Acc[0] term")

    std: dict[str, float] = {}
    amae_m, std["amae"] = _mean_or_skip(mae, "AMAE")
    armse_m, std["armse"] = _mean_or_skip(rmse, "ARMSE")
    artae_m, std["artae"] = _mean_or_skip(artae, "ARTAE")
    r2_m, std["r2"] = _mean_or_skip(r2, "R2")
    acc0_m, std["acc0"] = _mean_or_skip(acc0, "Acc[0]")
    acc0_lit_m, std["acc0_literal"] = _mean_or_skip(acc0_lit, "literal Acc[0]")
    delta_exceed = {}
    for d in deltas:
        delta_exceed[d], std[_delta_key(d)] = _mean_or_skip(exceed[d], f"delta>{d}")
    return MetricsReport(
        amae=amae_m,
        armse=armse_m,
        artae=artae_m,
        delta_exceed=delta_exceed,
        r2=r2_m,
        acc0=acc0_m,
        acc0_literal=acc0_lit_m,
        n_samples=len(preds),
        std=std,
    )
