"""Naive reference predictor.

A location nearest to a protected segment is treated as inundation-safe
and gets depth 0; every other location gets the global mean peak water
level of the training targets (one scalar over the entire dataset).
"""

from __future__ import annotations

import numpy as np

from ..gridcodec import CoastalLocation
from ..scenario import ProtectionScenario

__all__ = ["global_mean_depth", "baseline_predictor"]


def global_mean_depth(depth_vectors: list[np.ndarray]) -> float:
    """Scalar mean over every location of every training sample."""
    if not depth_vectors:
        raise ValueError("no depth vectors given")
    return float(np.concatenate([np.asarray(v).ravel() for v in depth_vectors]).mean())


def baseline_predictor(
    scenario: ProtectionScenario,
    locations: list[CoastalLocation],
    dataset_mean_depth: float,
) -> np.ndarray:
    """Depths ordered by location id: 0 where the nearest segment is
    protected, the dataset mean elsewhere."""
    ordered = sorted(locations, key=lambda loc: loc.id)
    return np.array(
        [0.0 if scenario.protected(loc.segment_id) else dataset_mean_depth for loc in ordered],
        dtype=np.float64,
    )
