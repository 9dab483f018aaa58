"""Cutout augmentation: zero out random square patches of input maps.

Targets are never touched; only the susceptibility input is occluded.
Each augmented copy gets its own rng stream derived from
(seed, original index, copy index), so the result is independent of
iteration order and safe to parallelize.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gridcodec import InundationMap, SusceptibilityMap

__all__ = ["CutoutConfig", "cutout", "augment_dataset"]


@dataclass(frozen=True)
class CutoutConfig:
    """Patch geometry and volume of the augmentation."""

    n_patches: int = 2
    patch_size: int = 60
    m: int = 19  # augmented copies per original; originals are kept
    seed: int = 0

    def validate(self, H: int, W: int) -> None:
        if self.n_patches < 1:
            raise ValueError("n_patches must be >= 1")
        if self.patch_size < 1 or self.patch_size > min(H, W):
            raise ValueError(f"patch_size must be in [1, {min(H, W)}] for a {H}x{W} grid")
        if self.m < 0:
            raise ValueError("m must be >= 0")


def cutout(smap: SusceptibilityMap, cfg: CutoutConfig, draw: np.random.Generator) -> SusceptibilityMap:
    """Copy of the map with ``n_patches`` random squares zeroed.

    Each patch is a half-open square [c - s//2, c - s//2 + s) in both
    axes, centered on a uniformly drawn cell and clipped at the grid
    edges; patches may overlap.
    """
    H, W = smap.shape
    cfg.validate(H, W)
    grid = smap.grid.copy()
    s = cfg.patch_size
    for _ in range(cfg.n_patches):
        ci = int(draw.integers(0, H))
        cj = int(draw.integers(0, W))
        i0 = max(ci - s // 2, 0)
        j0 = max(cj - s // 2, 0)
        i1 = min(ci - s // 2 + s, H)
        j1 = min(cj - s // 2 + s, W)
        grid[i0:i1, j0:j1] = 0
    return SusceptibilityMap(grid=grid)


def augment_dataset(
    pairs: list[tuple[SusceptibilityMap, InundationMap]],
    cfg: CutoutConfig,
) -> list[tuple[SusceptibilityMap, InundationMap]]:
    """Originals plus m cutout copies per original: (m+1) * n pairs.

    Output order: all originals first (input order), then copies grouped
    by original. Targets are shared, not copied.
    """
    out = list(pairs)
    for orig_idx, (smap, imap) in enumerate(pairs):
        for copy_idx in range(cfg.m):
            rng = np.random.default_rng((cfg.seed, orig_idx, copy_idx))
            out.append((cutout(smap, cfg, rng), imap))
    return out
