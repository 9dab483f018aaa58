"""JSON run configuration shared by the CLI commands.

Sections and their keys (all optional, defaults in parentheses):

    model:   H, W (required), F, K, C, M, w, modulation_level, r_ratio,
             activation, init, variant
    train:   lr_peak, warmup_epochs, main_epochs, plateau_factor,
             plateau_patience, early_stop_patience, batch_size, theta,
             seed, beta1, beta2, epsilon
    augment: n_patches (2), patch_size (60), m (19), seed (0),
             apply_to_val (true)
    split:   train, val, test (required for training), seed (0)
"""

from __future__ import annotations

import json
from pathlib import Path

from .augment import CutoutConfig
from .data import SplitSpec
from .model import ModelConfig
from .train import TrainConfig

__all__ = ["load_config", "model_config", "train_config", "cutout_config", "split_spec"]


def load_config(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def _take(section: dict, allowed: set[str], where: str) -> dict:
    unknown = section.keys() - allowed
    if unknown:
        raise ValueError(f"unknown {where} config keys: {sorted(unknown)}")
    return dict(section)


def model_config(cfg: dict) -> ModelConfig:
    section = _take(cfg.get("model", {}), {
        "H", "W", "F", "K", "C", "M", "w", "modulation_level", "r_ratio",
        "activation", "init", "variant",
    }, "model")
    if "H" not in section or "W" not in section:
        raise ValueError("model config needs H and W")
    return ModelConfig(**section)


def train_config(cfg: dict, seed_override: int | None = None) -> TrainConfig:
    section = _take(cfg.get("train", {}), {
        "lr_peak", "warmup_epochs", "main_epochs", "plateau_factor",
        "plateau_patience", "early_stop_patience", "batch_size", "theta",
        "seed", "beta1", "beta2", "epsilon",
    }, "train")
    if seed_override is not None:
        section["seed"] = seed_override
    return TrainConfig(**section)


def cutout_config(cfg: dict) -> tuple[CutoutConfig, bool]:
    section = _take(cfg.get("augment", {}), {"n_patches", "patch_size", "m", "seed", "apply_to_val"}, "augment")
    apply_to_val = bool(section.pop("apply_to_val", True))
    return CutoutConfig(**section), apply_to_val


def split_spec(cfg: dict) -> SplitSpec:
    section = _take(cfg.get("split", {}), {"train", "val", "test", "seed"}, "split")
    for key in ("train", "val", "test"):
        if key not in section:
            raise ValueError("split config needs train, val and test counts")
    return SplitSpec(**section)
