"""CASPIAN: a dual-path convolutional encoder-decoder for flood maps.

A parameter-free pooling path turns the three-class input grid into
per-class indicator maps and downsamples them in a cascade; the
convolutional path runs a constant-width encoder, a grouped-convolution
residual bottleneck, and a transposed-convolution decoder. Cascade
levels are concatenated into both paths' matching resolutions, an
SE-style modulation block rescales decoder channels from the pooled
class maps, and the head adds a channel sum to a 1x1 projection before
a final ReLU, so predicted depths are non-negative.

Ablation variants: 'b' drops the channel sum, 'gamma' shrinks the
bottleneck to 2 blocks, 'z' removes the modulation block, 'omega'
removes the entire pooling path.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import nn
from .nn.autodiff import Tensor, no_grad
from .nn.store import TensorStore, read_store, store_fingerprint, write_store

__all__ = [
    "ModelConfig",
    "CaspianNet",
    "ModelConfigError",
    "FULL_SCALE_CONFIG",
    "segregated_pooling",
    "pooling_cascade",
    "build_caspian",
    "build_ablation",
    "count_params",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_fingerprint",
]

VARIANTS = ("full", "b", "gamma", "z", "omega")


class ModelConfigError(ValueError):
    """Inconsistent architecture hyperparameters."""


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters.

    F: filters per block (constant across levels), K: downsampling
    depth, C: bottleneck cardinality, M: bottleneck block count,
    w: group width (bottleneck inner width is C*w), r = floor(r_ratio*F)
    hidden units in the modulation block.
    """

    H: int
    W: int
    F: int = 72
    K: int = 4
    C: int = 34
    M: int = 8
    w: int = 4
    modulation_level: int = 1
    r_ratio: float = 0.85
    activation: str = "tanh"
    init: str = "glorot_normal"
    variant: str = "full"

    @property
    def D(self) -> int:
        return self.C * self.w

    @property
    def r(self) -> int:
        return max(1, math.floor(self.r_ratio * self.F))

    @property
    def has_pooling_path(self) -> bool:
        return self.variant != "omega"

    @property
    def has_modulation(self) -> bool:
        return self.variant in ("full", "b", "gamma")

    @property
    def has_channel_sum(self) -> bool:
        return self.variant != "b"

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ModelConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.F < 1 or self.C < 1 or self.w < 1 or self.M < 0 or self.K < 1:
            raise ModelConfigError("F, C, w must be >= 1; K >= 1; M >= 0")
        scale = 1 << self.K
        if self.H % scale or self.W % scale:
            raise ModelConfigError(f"grid {self.H}x{self.W} must be divisible by 2^K = {scale}")
        if self.activation not in ("tanh", "relu", "sigmoid"):
            raise ModelConfigError(f"unknown activation {self.activation!r}")
        if self.init != "glorot_normal":
            raise ModelConfigError(f"unknown initializer {self.init!r}")
        if self.has_modulation and not (1 <= self.modulation_level <= self.K - 1):
            raise ModelConfigError(f"modulation_level must lie in [1, K-1] = [1, {self.K - 1}]")


FULL_SCALE_CONFIG = ModelConfig(H=1024, W=1024, F=72, K=4, C=34, M=8, w=4, modulation_level=1)


# ---------------------------------------------------------------------------
# Pooling path (parameter-free, plain numpy)


def _as_nhwc(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[None, :, :, None]
    elif x.ndim == 3:
        x = x[None, :, :, :]
    if x.ndim != 4 or x.shape[3] != 1:
        raise ValueError("expected an (N, H, W, 1) class grid")
    return x


def _half_max_pool(x: np.ndarray) -> np.ndarray:
    n, h, w, c = x.shape
    return x.reshape(n, h // 2, 2, w // 2, 2, c).max(axis=(2, 4))


def segregated_pooling(x: np.ndarray, dtype=np.float32) -> np.ndarray:
    """Class grid -> 2-channel indicator maps, max-pooled once.

    Channel 0 flags +1 cells (protected), channel 1 flags -1 cells.
    Output shape (N, H/2, W/2, 2). Inputs must stay in {-1, 0, +1}.
    """
    x = _as_nhwc(x)
    if not np.isin(x, (-1, 0, 1)).all():
        raise AssertionError("segregated pooling input must take values in {-1, 0, +1}")
    pos = (x == 1).astype(dtype)
    neg = (x == -1).astype(dtype)
    both = np.concatenate([pos, neg], axis=3)
    return _half_max_pool(both)


def pooling_cascade(seg: np.ndarray, K: int) -> list[np.ndarray]:
    """Levels 1..K of repeated 2x2/stride-2 max pooling of the
    segregated maps; level k has shape (N, H/2^k, W/2^k, 2)."""
    levels = [seg]
    for _ in range(K - 1):
        levels.append(_half_max_pool(levels[-1]))
    return levels


# ---------------------------------------------------------------------------
# Model


def _glorot_normal(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int, dtype) -> np.ndarray:
    std = math.sqrt(2.0 / (fan_in + fan_out))
    return rng.normal(0.0, std, size=shape).astype(dtype)


class CaspianNet:
    """Built model: ordered parameter store plus the forward graph."""

    def __init__(self, config: ModelConfig, seed: int = 0, dtype=np.float32, params: dict[str, np.ndarray] | None = None):
        config.validate()
        self.config = config
        self.seed = seed
        self.dtype = dtype
        self.params: dict[str, Tensor] = {}
        if params is None:
            self._initialize(np.random.default_rng(seed))
        else:
            for name, shape in self._parameter_plan():
                if name not in params:
                    raise ModelConfigError(f"checkpoint is missing tensor {name!r}")
                arr = np.asarray(params[name], dtype=dtype)
                if tuple(arr.shape) != shape:
                    raise ModelConfigError(f"tensor {name!r} has shape {arr.shape}, expected {shape}")
                self.params[name] = Tensor(arr, requires_grad=True, name=name)

    # -- construction -------------------------------------------------

    def _parameter_plan(self) -> list[tuple[str, tuple[int, ...]]]:
        cfg = self.config
        F, K, D = cfg.F, cfg.K, cfg.D
        enc_point_in = F + 2 if cfg.has_pooling_path else F
        plan: list[tuple[str, tuple[int, ...]]] = [
            ("enc1.conv.w", (3, 3, 1, F)),
            ("enc1.conv.b", (F,)),
            ("enc1.point.w", (1, 1, enc_point_in, F)),
            ("enc1.point.b", (F,)),
        ]
        for k in range(2, K + 1):
            plan += [
                (f"enc{k}.depthwise.w", (3, 3, 1, F)),
                (f"enc{k}.depthwise.b", (F,)),
                (f"enc{k}.point.w", (1, 1, enc_point_in, F)),
                (f"enc{k}.point.b", (F,)),
            ]
        for m in range(1, cfg.M + 1):
            plan += [
                (f"bott{m}.reduce.w", (1, 1, F, D)),
                (f"bott{m}.reduce.b", (D,)),
                (f"bott{m}.grouped.w", (3, 3, cfg.w, D)),
                (f"bott{m}.grouped.b", (D,)),
                (f"bott{m}.expand.w", (1, 1, D, F)),
                (f"bott{m}.expand.b", (F,)),
            ]
        for j in range(1, K + 1):
            has_concat = cfg.has_pooling_path and (K - j) >= 1
            plan += [
                (f"dec{j}.tconv.w", (2, 2, F, F)),
                (f"dec{j}.tconv.b", (F,)),
                (f"dec{j}.point.w", (1, 1, F + 2 if has_concat else F, F)),
                (f"dec{j}.point.b", (F,)),
            ]
        if cfg.has_modulation:
            plan += [
                ("mod.fc1.w", (2, cfg.r)),
                ("mod.fc1.b", (cfg.r,)),
                ("mod.fc2.w", (cfg.r, F)),
                ("mod.fc2.b", (F,)),
            ]
        plan += [
            ("head.point.w", (1, 1, F, 1)),
            ("head.point.b", (1,)),
        ]
        return plan

    def _initialize(self, rng: np.random.Generator) -> None:
        for name, shape in self._parameter_plan():
            if name.endswith(".b"):
                arr = np.zeros(shape, dtype=self.dtype)
            elif len(shape) == 2:  # dense kernel
                arr = _glorot_normal(rng, shape, shape[0], shape[1], self.dtype)
            else:  # conv / tconv kernel (kh, kw, cpg_or_in, out)
                kh, kw, cin, cout = shape
                arr = _glorot_normal(rng, shape, kh * kw * cin, kh * kw * cout, self.dtype)
            self.params[name] = Tensor(arr, requires_grad=True, name=name)

    # -- forward ------------------------------------------------------

    def _act(self, t: Tensor) -> Tensor:
        return nn.activation(t, self.config.activation)

    def forward(self, x) -> Tensor:
        """(N, H, W, 1) class grid -> (N, H, W, 1) non-negative depths."""
        cfg = self.config
        p = self.params
        if isinstance(x, Tensor):
            x_t = x
            x_data = x.data
        else:
            x_data = _as_nhwc(x).astype(self.dtype)
            x_t = Tensor(x_data)
        if x_data.shape[1] != cfg.H or x_data.shape[2] != cfg.W:
            raise ModelConfigError(f"input grid {x_data.shape[1:3]} does not match configured {(cfg.H, cfg.W)}")

        levels: list[Tensor] = []
        if cfg.has_pooling_path:
            seg = segregated_pooling(x_data, dtype=self.dtype)
            levels = [Tensor(lv) for lv in pooling_cascade(seg, cfg.K)]

        # Encoder: strided conv then depthwise blocks, constant width F,
        # each with a parameter-free avg-pool residual after the first.
        h = nn.conv2d(x_t, p["enc1.conv.w"], p["enc1.conv.b"], stride=2, padding="same")
        if cfg.has_pooling_path:
            h = nn.concat([h, levels[0]], axis=3)
        h = self._act(nn.conv2d(h, p["enc1.point.w"], p["enc1.point.b"]))
        for k in range(2, cfg.K + 1):
            skip = nn.avg_pool2d(h, 2, 2)
            t = nn.conv2d(h, p[f"enc{k}.depthwise.w"], p[f"enc{k}.depthwise.b"], stride=2, padding="same", groups=cfg.F)
            if cfg.has_pooling_path:
                t = nn.concat([t, levels[k - 1]], axis=3)
            t = self._act(nn.conv2d(t, p[f"enc{k}.point.w"], p[f"enc{k}.point.b"]))
            h = nn.add(t, skip)

        # Bottleneck: M identical grouped-convolution residual blocks.
        for m in range(1, cfg.M + 1):
            t = self._act(nn.conv2d(h, p[f"bott{m}.reduce.w"], p[f"bott{m}.reduce.b"]))
            t = self._act(nn.conv2d(t, p[f"bott{m}.grouped.w"], p[f"bott{m}.grouped.b"], padding="same", groups=cfg.C))
            t = nn.conv2d(t, p[f"bott{m}.expand.w"], p[f"bott{m}.expand.b"])
            h = nn.add(h, t)

        # Decoder: upsample, merge the matching cascade level, rescale
        # by the modulation weights from the configured block onward.
        mod_weights: Tensor | None = None
        for j in range(1, cfg.K + 1):
            h = nn.transposed_conv2d(h, p[f"dec{j}.tconv.w"], p[f"dec{j}.tconv.b"], stride=2)
            level_idx = cfg.K - j  # cascade level matching the upsampled resolution
            if cfg.has_pooling_path and level_idx >= 1:
                h = nn.concat([h, levels[level_idx - 1]], axis=3)
            h = self._act(nn.conv2d(h, p[f"dec{j}.point.w"], p[f"dec{j}.point.b"]))
            if cfg.has_modulation and j == cfg.modulation_level:
                mod_weights = self._modulation(levels[level_idx - 1])
            if mod_weights is not None:
                h = nn.mul(h, mod_weights)

        out = nn.conv2d(h, p["head.point.w"], p["head.point.b"])
        if cfg.has_channel_sum:
            out = nn.add(out, nn.channel_sum(h))
        return nn.relu(out)

    def _modulation(self, pool_maps: Tensor) -> Tensor:
        """Pooled class maps -> per-channel weights in (0, 1), shaped
        (N, 1, 1, F) for broadcasting over decoder features."""
        p = self.params
        g = nn.mean_over_hw(pool_maps)  # (N, 2)
        g = nn.tanh(nn.dense(g, p["mod.fc1.w"], p["mod.fc1.b"]))
        g = nn.sigmoid(nn.dense(g, p["mod.fc2.w"], p["mod.fc2.b"]))
        return nn.reshape(g, (g.shape[0], 1, 1, self.config.F))

    def predict_grid(self, class_grid: np.ndarray) -> np.ndarray:
        """Inference convenience: (H, W) classes -> (H, W) depths."""
        with no_grad():
            out = self.forward(class_grid)
        return out.data[0, :, :, 0]

    # -- bookkeeping ----------------------------------------------------

    def count_params(self) -> int:
        return sum(int(t.data.size) for t in self.params.values())

    def parameter_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.params.items()}

    def set_parameter_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, t in self.params.items():
            t.data = np.asarray(arrays[name], dtype=self.dtype).reshape(t.data.shape)

    def zero_grads(self) -> None:
        for t in self.params.values():
            t.zero_grad()


def build_caspian(cfg: ModelConfig, seed: int = 0, dtype=np.float32) -> CaspianNet:
    """Assemble the full model (or the variant named in cfg.variant)."""
    return CaspianNet(cfg, seed=seed, dtype=dtype)


_VARIANT_ALIASES = {
    "b": "b",
    "gamma": "gamma",
    "z": "z",
    "omega": "omega",
    "full": "full",
}


def build_ablation(cfg: ModelConfig, variant: str, seed: int = 0, dtype=np.float32) -> CaspianNet:
    """Build one of the ablation variants b / gamma / z / omega.

    gamma additionally pins the bottleneck depth M to 2.
    """
    key = variant.lower()
    if key not in _VARIANT_ALIASES:
        raise ModelConfigError(f"unknown ablation variant {variant!r}")
    key = _VARIANT_ALIASES[key]
    new_cfg = replace(cfg, variant=key, M=2 if key == "gamma" else cfg.M)
    return CaspianNet(new_cfg, seed=seed, dtype=dtype)


def count_params(model: CaspianNet) -> int:
    return model.count_params()


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(model: CaspianNet, path: str | Path) -> None:
    store = TensorStore(
        tensors={name: t.data for name, t in model.params.items()},
        meta={
            "kind": "caspian-checkpoint",
            "config": asdict(model.config),
            "seed": model.seed,
            "initializer": model.config.init,
        },
    )
    write_store(path, store)


def load_checkpoint(path: str | Path, dtype=np.float32) -> CaspianNet:
    store = read_store(path)
    if store.meta.get("kind") != "caspian-checkpoint":
        raise ModelConfigError(f"{path} is not a model checkpoint")
    cfg = ModelConfig(**store.meta["config"])
    return CaspianNet(cfg, seed=store.meta.get("seed", 0), dtype=dtype, params=store.tensors)


def checkpoint_fingerprint(path: str | Path) -> str:
    return store_fingerprint(path)
