"""On-disk artifacts for fitted baselines: JSON manifest + float32 blobs.

Every method serializes into the shared tensor-store layout. Linear-in-
features methods (linear, lasso, svr) reload into closed-form
predictors; kriging reloads its full GP state. Blobs are float32, so a
reloaded model reproduces the in-memory one to single precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..nn.store import TensorStore, read_store, write_store
from .kriging import KrigingComponent, KrigingPcaModel
from .lasso import LassoPolyModel
from .linear import LinearModel
from .pca import PcaBasis
from .svr import SvrPerLocation

__all__ = ["save_baseline", "load_baseline", "LoadedBaseline"]

METHODS = ("naive", "linear", "lasso", "svr", "kriging")


@dataclass
class LoadedBaseline:
    method: str
    meta: dict
    model: object | None  # None for the naive predictor

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.model is None:
            raise ValueError("the naive baseline predicts from dataset geometry, not from this artifact")
        return self.model.predict(X)

    @property
    def global_mean(self) -> float:
        return float(self.meta["global_mean"])


class _AffinePredictor:
    """X @ coef + intercept, used for reloaded linear and svr models."""

    def __init__(self, coef: np.ndarray, intercept: np.ndarray):
        self.coef = coef
        self.intercept = intercept

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        out = X @ self.coef + self.intercept
        return out[0] if single else out


def save_baseline(path: str | Path, method: str, model=None, global_mean: float | None = None) -> None:
    if method not in METHODS:
        raise ValueError(f"unknown baseline method {method!r}")
    tensors: dict[str, np.ndarray] = {}
    meta: dict = {"kind": "baseline-artifact", "method": method}
    if method == "naive":
        if global_mean is None:
            raise ValueError("naive baseline needs the global mean depth")
        meta["global_mean"] = float(global_mean)
    elif method == "linear":
        assert isinstance(model, LinearModel)
        tensors["intercept"] = model.intercept
        tensors["coef"] = model.coef
    elif method == "lasso":
        assert isinstance(model, LassoPolyModel)
        tensors["intercept"] = model.intercept
        tensors["coef"] = model.coef
        meta["lambda"] = model.lam
        meta["n_inputs"] = model.n_inputs
    elif method == "svr":
        assert isinstance(model, SvrPerLocation)
        coef = np.column_stack([m.coef_[0] for m in model.models])
        intercept = np.array([float(m.intercept_[0]) for m in model.models])
        tensors["coef"] = coef
        tensors["intercept"] = intercept
        meta["C"] = model.C
        meta["epsilon"] = model.epsilon
    elif method == "kriging":
        assert isinstance(model, KrigingPcaModel)
        tensors["pca.mean"] = model.basis.mean
        tensors["pca.components"] = model.basis.components
        tensors["pca.evr"] = model.basis.explained_variance_ratio
        tensors["train_inputs"] = model.components[0].X
        meta["n_components"] = len(model.components)
        meta["nuggets"] = [c.nugget for c in model.components]
        meta["sigma2"] = [c.sigma2 for c in model.components]
        for i, comp in enumerate(model.components):
            tensors[f"comp{i}.lengthscales"] = comp.lengthscales
            tensors[f"comp{i}.beta"] = comp.beta
            tensors[f"comp{i}.alpha"] = comp.alpha
    write_store(path, TensorStore(tensors=tensors, meta=meta))


def load_baseline(path: str | Path) -> LoadedBaseline:
    store = read_store(path)
    meta = store.meta
    if meta.get("kind") != "baseline-artifact":
        raise ValueError(f"{path} is not a baseline artifact")
    method = meta["method"]
    t = {k: v.astype(np.float64) for k, v in store.tensors.items()}
    if method == "naive":
        return LoadedBaseline(method=method, meta=meta, model=None)
    if method in ("linear", "svr"):
        return LoadedBaseline(method=method, meta=meta, model=_AffinePredictor(t["coef"], t["intercept"]))
    if method == "lasso":
        model = LassoPolyModel(intercept=t["intercept"], coef=t["coef"], lam=meta["lambda"],
                               n_inputs=meta["n_inputs"], converged=True, final_gap=0.0)
        return LoadedBaseline(method=method, meta=meta, model=model)
    if method == "kriging":
        basis = PcaBasis(mean=t["pca.mean"], components=t["pca.components"],
                         explained_variance_ratio=t["pca.evr"])
        components = []
        for i in range(meta["n_components"]):
            components.append(KrigingComponent(
                X=t["train_inputs"],
                lengthscales=t[f"comp{i}.lengthscales"],
                sigma2=meta["sigma2"][i],
                beta=t[f"comp{i}.beta"],
                alpha=t[f"comp{i}.alpha"],
                nugget=meta["nuggets"][i],
            ))
        return LoadedBaseline(method=method, meta=meta, model=KrigingPcaModel(basis=basis, components=components))
    raise ValueError(f"unknown baseline method {method!r}")
