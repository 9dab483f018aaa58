"""HTTP inference service for what-if scenario exploration.

Loads one checkpoint and the dataset geometry, then serves millisecond
predictions:

    GET  /health     -> {"status": "ok"}
    GET  /meta       -> shape constants, fingerprint, parameter count
    GET  /locations  -> id/lon/lat/segment_id per location
    POST /predict    -> depths for one scenario (optional grid, diff)
    POST /compare    -> per-location depth difference between scenarios

Malformed bodies return 400 with field diagnostics; a scenario of the
wrong length returns 422; unexpected numeric failures return 500 with
an incident id. The loaded model is immutable, so concurrent requests
are safe and responses are deterministic per fingerprint.
"""

from __future__ import annotations

import base64
import time
import uuid
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .data import Dataset, load_dataset
from .gridcodec import (
    GridIndexMap,
    InundationMap,
    build_index_map,
    encode_susceptibility,
    extract_depths,
    write_grid,
)
from .model import CaspianNet, checkpoint_fingerprint, load_checkpoint
from .scenario import ProtectionScenario, ScenarioError, parse_scenario

__all__ = ["PredictRequest", "PredictResponse", "ServiceState", "create_app", "serve"]


class PredictRequest(BaseModel):
    scenario: str
    include_grid: bool = False
    reference: str | None = None


class PredictResponse(BaseModel):
    depths: list[float]
    latency_ms: float
    model_fingerprint: str
    grid_b64: str | None = None
    diff: list[float] | None = None


class CompareRequest(BaseModel):
    a: str
    b: str


@dataclass
class ServiceState:
    model: CaspianNet
    dataset: Dataset
    index_map: GridIndexMap
    fingerprint: str

    def parse(self, text: str) -> ProtectionScenario:
        try:
            scenario = parse_scenario(text)
        except ScenarioError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if scenario.d_x != self.dataset.manifest.d_x:
            raise HTTPException(
                status_code=422,
                detail=f"scenario has {scenario.d_x} bits, model expects {self.dataset.manifest.d_x}",
            )
        return scenario

    def depths_for(self, scenario: ProtectionScenario) -> tuple[np.ndarray, np.ndarray]:
        smap = encode_susceptibility(scenario, self.dataset.locations, self.index_map)
        grid = self.model.predict_grid(smap.grid)
        mask = np.zeros_like(grid, dtype=bool)
        mask[self.index_map.rows, self.index_map.cols] = True
        return extract_depths(InundationMap(grid=grid, mask=mask), self.index_map), grid


def load_state(model_path: str, data_dir: str) -> ServiceState:
    model = load_checkpoint(model_path)
    dataset = load_dataset(data_dir)
    if (model.config.H, model.config.W) != (dataset.manifest.H, dataset.manifest.W):
        raise ValueError(
            f"checkpoint grid {(model.config.H, model.config.W)} does not match "
            f"dataset grid {(dataset.manifest.H, dataset.manifest.W)}"
        )
    index_map = build_index_map(dataset.locations, dataset.manifest.H, dataset.manifest.W)
    return ServiceState(
        model=model,
        dataset=dataset,
        index_map=index_map,
        fingerprint=checkpoint_fingerprint(model_path),
    )


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="flood-surrogate")

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "malformed request body", "errors": exc.errors()})

    @app.exception_handler(Exception)
    async def incident_handler(request: Request, exc: Exception):
        incident = uuid.uuid4().hex
        return JSONResponse(status_code=500, content={"detail": "internal error", "incident_id": incident})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/meta")
    def meta():
        manifest = state.dataset.manifest
        return {
            "d_x": manifest.d_x,
            "d_y": manifest.d_y,
            "H": manifest.H,
            "W": manifest.W,
            "model_fingerprint": state.fingerprint,
            "parameter_count": state.model.count_params(),
            "variant": state.model.config.variant,
        }

    @app.get("/locations")
    def locations():
        return {
            "locations": [
                {"id": loc.id, "lon": loc.lon, "lat": loc.lat, "segment_id": loc.segment_id}
                for loc in sorted(state.dataset.locations, key=lambda l: l.id)
            ]
        }

    @app.post("/predict", response_model=PredictResponse, response_model_exclude_none=True)
    def predict(req: PredictRequest):
        scenario = state.parse(req.scenario)
        started = time.perf_counter()
        depths, grid = state.depths_for(scenario)
        latency_ms = (time.perf_counter() - started) * 1000.0
        grid_b64 = None
        if req.include_grid:
            grid_b64 = base64.b64encode(write_grid(grid, state.index_map.d_y)).decode("ascii")
        diff = None
        if req.reference is not None:
            ref_depths, _ = state.depths_for(state.parse(req.reference))
            diff = (depths - ref_depths).tolist()
        return PredictResponse(
            depths=depths.tolist(),
            latency_ms=max(latency_ms, 1e-3),
            model_fingerprint=state.fingerprint,
            grid_b64=grid_b64,
            diff=diff,
        )

    @app.post("/compare")
    def compare(req: CompareRequest):
        started = time.perf_counter()
        da, _ = state.depths_for(state.parse(req.a))
        db, _ = state.depths_for(state.parse(req.b))
        latency_ms = (time.perf_counter() - started) * 1000.0
        return {"a": req.a, "b": req.b, "diff": (da - db).tolist(), "latency_ms": latency_ms}

    return app


def serve(model_path: str, data_dir: str, port: int = 8000, host: str = "127.0.0.1") -> None:
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(load_state(model_path, data_dir))
    uvicorn.run(app, host=host, port=port, log_level="info")
