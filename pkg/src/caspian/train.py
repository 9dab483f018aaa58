"""Training loop: Adam on masked Huber loss with linear warmup,
reduce-on-plateau and early stopping.

The schedule ramps the learning rate linearly from ~0 to lr_peak over
the warmup epochs, then holds it during the main phase except for a
x plateau_factor cut whenever the validation loss has not improved for
plateau_patience consecutive epochs. Validation is evaluated every
epoch, but the plateau and early-stop counters only run in the main
phase. The returned model carries the parameters of the best validation
epoch seen at any point.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .gridcodec import InundationMap, SusceptibilityMap
from .model import CaspianNet

__all__ = [
    "TrainConfig",
    "TrainHistory",
    "TrainingError",
    "PlateauState",
    "lr_at",
    "reduce_on_plateau",
    "AdamState",
    "train",
]

# Strict-improvement margin; guards plateau logic against float noise.
MIN_DELTA = 1e-8


class TrainingError(RuntimeError):
    """Aborted run (non-finite loss, bad configuration)."""


@dataclass(frozen=True)
class TrainConfig:
    lr_peak: float = 8e-4
    warmup_epochs: int = 20
    main_epochs: int = 200
    plateau_factor: float = 0.85
    plateau_patience: int = 10
    early_stop_patience: int = 40
    batch_size: int = 2
    theta: float = 0.5
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7

    def validate(self) -> None:
        if self.lr_peak <= 0 or self.batch_size < 1 or self.theta < 0:
            raise TrainingError("lr_peak, batch_size must be positive; theta >= 0")
        if not (0 < self.plateau_factor < 1):
            raise TrainingError("plateau_factor must lie in (0, 1)")
        if self.warmup_epochs < 0 or self.main_epochs < 0:
            raise TrainingError("epoch counts must be >= 0")
        if self.plateau_patience < 1 or self.early_stop_patience < 1:
            raise TrainingError("patience values must be >= 1")


@dataclass
class TrainHistory:
    epochs: list[dict] = field(default_factory=list)
    plateau_reduction_epochs: list[int] = field(default_factory=list)
    early_stop_epoch: int | None = None
    best_epoch: int | None = None
    best_val_loss: float = float("inf")
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "plateau_reduction_epochs": self.plateau_reduction_epochs,
            "early_stop_epoch": self.early_stop_epoch,
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
            "wall_time_s": self.wall_time_s,
        }


def lr_at(epoch: int, reductions: int, cfg: TrainConfig) -> float:
    """Learning rate for a given epoch and number of plateau cuts so far."""
    if epoch < cfg.warmup_epochs:
        return cfg.lr_peak * (epoch + 1) / cfg.warmup_epochs
    return cfg.lr_peak * cfg.plateau_factor ** reductions


@dataclass
class PlateauState:
    best: float = float("inf")
    wait: int = 0
    reductions: int = 0

    def step(self, val_loss: float, patience: int) -> bool:
        """Advance one epoch; True when a reduction fires this epoch."""
        if val_loss < self.best - MIN_DELTA:
            self.best = val_loss
            self.wait = 0
            return False
        self.wait += 1
        if self.wait >= patience:
            self.reductions += 1
            self.wait = 0
            return True
        return False


def reduce_on_plateau(val_losses: list[float], patience: int, factor: float,
                      state: PlateauState | None = None) -> tuple[float, PlateauState]:
    """Replay a validation-loss sequence; returns the cumulative lr
    multiplier and the final state."""
    state = state or PlateauState()
    for v in val_losses:
        state.step(v, patience)
    return factor ** state.reductions, state


class AdamState:
    """Adam moment buffers for a named parameter set."""

    def __init__(self, params: dict[str, nn.Tensor]):
        self.m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.t = 0

    def step(self, params: dict[str, nn.Tensor], lr: float, cfg: TrainConfig) -> None:
        self.t += 1
        b1, b2, eps = cfg.beta1, cfg.beta2, cfg.epsilon
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for name, p in params.items():
            g = p.grad
            if g is None:
                continue
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def _batch_arrays(pairs, indices, dtype) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xs = np.stack([pairs[i][0].grid for i in indices]).astype(dtype)[..., None]
    ys = np.stack([pairs[i][1].grid for i in indices]).astype(dtype)[..., None]
    ms = np.stack([pairs[i][1].mask for i in indices])[..., None]
    return xs, ys, ms


def evaluate_loss(model: CaspianNet, pairs, cfg: TrainConfig) -> float:
    """Masked Huber loss over a dataset, batched, without gradients."""
    total = 0.0
    with nn.no_grad():
        for start in range(0, len(pairs), cfg.batch_size):
            idx = range(start, min(start + cfg.batch_size, len(pairs)))
            xs, ys, ms = _batch_arrays(pairs, idx, model.dtype)
            out = model.forward(xs)
            loss = nn.masked_huber_mean(out, ys, ms, cfg.theta)
            total += float(loss.data) * len(idx)
    return total / len(pairs)


def train(
    model: CaspianNet,
    train_pairs: list[tuple[SusceptibilityMap, InundationMap]],
    val_pairs: list[tuple[SusceptibilityMap, InundationMap]],
    cfg: TrainConfig,
) -> tuple[CaspianNet, TrainHistory]:
    """Optimize the model in place; returns it with best-epoch weights."""
    cfg.validate()
    if not train_pairs or not val_pairs:
        raise TrainingError("training and validation splits must be non-empty")
    history = TrainHistory()
    adam = AdamState(model.params)
    plateau = PlateauState()
    es_wait = 0
    best_params: dict[str, np.ndarray] | None = None
    started = time.time()
    total_epochs = cfg.warmup_epochs + cfg.main_epochs
    for epoch in range(total_epochs):
        in_main = epoch >= cfg.warmup_epochs
        lr = lr_at(epoch, plateau.reductions, cfg)
        order = np.random.default_rng((cfg.seed, epoch)).permutation(len(train_pairs))
        running = 0.0
        for b, start in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            xs, ys, ms = _batch_arrays(train_pairs, idx, model.dtype)
            model.zero_grads()
            out = model.forward(xs)
            loss = nn.masked_huber_mean(out, ys, ms, cfg.theta)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(f"non-finite training loss {value} at epoch {epoch}, batch {b}")
            loss.backward()
            adam.step(model.params, lr, cfg)
            running += value * len(idx)
        train_loss = running / len(order)
        val_loss = evaluate_loss(model, val_pairs, cfg)
        if not np.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        history.epochs.append({
            "epoch": epoch,
            "phase": "main" if in_main else "warmup",
            "lr": lr,
            "train_loss": train_loss,
            "val_loss": val_loss,
        })
        improved = val_loss < history.best_val_loss - MIN_DELTA
        if improved:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best_params = {k: t.data.copy() for k, t in model.params.items()}
        if in_main:
            if plateau.step(val_loss, cfg.plateau_patience):
                history.plateau_reduction_epochs.append(epoch)
            es_wait = 0 if improved else es_wait + 1
            if es_wait >= cfg.early_stop_patience:
                history.early_stop_epoch = epoch
                break
    if best_params is not None:
        model.set_parameter_arrays(best_params)
    history.wall_time_s = time.time() - started
    return model, history
