"""Dataset directory format, split generation and the synthetic oracle.

A dataset directory holds:
    manifest.json            -- shape constants and file inventory
    locations.csv            -- id,lon,lat,segment_id
    segments.csv             -- segment_id,vertex_idx,lon,lat
    scenarios.csv            -- scenario_id,bitstring
    depths/<scenario_id>.csv -- location_id,peak_depth_m

Floats are written with 9 significant digits, enough to round-trip
float32 exactly. The synthetic oracle is a declared stand-in for a
hydrodynamic simulator: per-location base depth, reduced by protecting
the nearest segment, raised by spillover from protected neighbors of
that segment.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .gridcodec import CoastalLocation, SegmentGeometry, nearest_segment
from .scenario import ProtectionScenario, make_base_scenarios, parse_scenario, random_scenarios

__all__ = [
    "DatasetManifest",
    "Dataset",
    "SplitSpec",
    "SynthOracleParams",
    "DatasetError",
    "load_dataset",
    "split_dataset",
    "synth_oracle",
    "generate_synthetic_dataset",
]

SCHEMA_VERSION = 1
FLOAT_FMT = "%.9g"

# Sub-stream tags so geometry, base depths and scenario sampling draw
# from independent deterministic streams of one dataset seed.
_GEOMETRY_STREAM = 11
_BASE_DEPTH_STREAM = 12
_SCENARIO_STREAM = 13


class DatasetError(ValueError):
    """Malformed or inconsistent dataset directory."""


@dataclass(frozen=True)
class DatasetManifest:
    d_x: int
    d_y: int
    H: int
    W: int
    n_scenarios: int
    schema_version: int = SCHEMA_VERSION
    files: dict = field(default_factory=lambda: {
        "locations": "locations.csv",
        "segments": "segments.csv",
        "scenarios": "scenarios.csv",
        "depths_dir": "depths",
    })
    segment_ordering: str = "bitstring index i refers to segment_id i; segment ids are 0-based and contiguous"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


@dataclass
class Dataset:
    manifest: DatasetManifest
    locations: list[CoastalLocation]
    segments: list[SegmentGeometry]
    pairs: list[tuple[ProtectionScenario, np.ndarray]]  # depths ordered by location id


@dataclass(frozen=True)
class SplitSpec:
    train: int
    val: int
    test: int
    seed: int = 0


@dataclass(frozen=True)
class SynthOracleParams:
    base_min: float = 0.0
    base_max: float = 2.0
    alpha: float = 1.0  # shielding from protecting the nearest segment
    beta: float = 0.3   # spillover from protected neighbors of that segment
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise DatasetError("alpha and beta must be >= 0")
        if self.base_max < self.base_min:
            raise DatasetError("base depth range is inverted")


# ---------------------------------------------------------------------------
# Loading


def _read_rows(path: Path, columns: list[str]) -> list[dict]:
    if not path.exists():
        raise DatasetError(f"missing dataset file {path.name}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != columns:
            raise DatasetError(f"{path.name}: expected header {','.join(columns)}")
        return list(reader)


def load_dataset(directory: str | Path) -> Dataset:
    """Parse and validate a dataset directory."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise DatasetError(f"missing manifest.json in {directory}")
    raw = json.loads(manifest_path.read_text())
    required = {"d_x", "d_y", "H", "W", "n_scenarios", "schema_version"}
    missing = required - raw.keys()
    if missing:
        raise DatasetError(f"manifest is missing keys: {sorted(missing)}")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise DatasetError(f"unsupported schema version {raw['schema_version']}")
    manifest = DatasetManifest(**{k: raw[k] for k in ("d_x", "d_y", "H", "W", "n_scenarios", "schema_version", "files", "segment_ordering") if k in raw})

    loc_rows = _read_rows(directory / manifest.files["locations"], ["id", "lon", "lat", "segment_id"])
    locations = [
        CoastalLocation(id=int(r["id"]), lon=float(r["lon"]), lat=float(r["lat"]), segment_id=int(r["segment_id"]))
        for r in loc_rows
    ]
    if len(locations) != manifest.d_y:
        raise DatasetError(f"locations.csv has {len(locations)} rows, manifest says d_y={manifest.d_y}")
    ids = [loc.id for loc in locations]
    if len(set(ids)) != len(ids):
        raise DatasetError("duplicate location ids")

    seg_rows = _read_rows(directory / manifest.files["segments"], ["segment_id", "vertex_idx", "lon", "lat"])
    by_segment: dict[int, list[tuple[int, float, float]]] = {}
    for r in seg_rows:
        by_segment.setdefault(int(r["segment_id"]), []).append((int(r["vertex_idx"]), float(r["lon"]), float(r["lat"])))
    if sorted(by_segment) != list(range(manifest.d_x)):
        raise DatasetError(f"segments.csv must cover segment ids 0..{manifest.d_x - 1}")
    segments = []
    for sid in range(manifest.d_x):
        verts = sorted(by_segment[sid])
        segments.append(SegmentGeometry(segment_id=sid, vertices=tuple((lon, lat) for _, lon, lat in verts)))
    for loc in locations:
        if not (0 <= loc.segment_id < manifest.d_x):
            raise DatasetError(f"location {loc.id} references unknown segment {loc.segment_id}")

    scen_rows = _read_rows(directory / manifest.files["scenarios"], ["scenario_id", "bitstring"])
    if len(scen_rows) != manifest.n_scenarios:
        raise DatasetError(f"scenarios.csv has {len(scen_rows)} rows, manifest says {manifest.n_scenarios}")
    id_order = sorted(ids)
    id_set = set(ids)
    pairs = []
    depths_dir = directory / manifest.files["depths_dir"]
    for r in scen_rows:
        sid = r["scenario_id"]
        scenario = parse_scenario(r["bitstring"].strip())
        if scenario.d_x != manifest.d_x:
            raise DatasetError(f"scenario {sid} has {scenario.d_x} bits, expected {manifest.d_x}")
        depth_rows = _read_rows(depths_dir / f"{sid}.csv", ["location_id", "peak_depth_m"])
        seen: dict[int, float] = {}
        for row in depth_rows:
            lid = int(row["location_id"])
            if lid not in id_set:
                raise DatasetError(f"depths/{sid}.csv names unknown location id {lid}")
            depth = float(row["peak_depth_m"])
            if depth < 0:
                raise DatasetError(f"depths/{sid}.csv: negative depth {depth} at location {lid}")
            seen[lid] = depth
        missing_ids = [i for i in id_order if i not in seen]
        if missing_ids:
            raise DatasetError(f"depths/{sid}.csv is missing location id {missing_ids[0]}")
        vec = np.array([seen[i] for i in id_order], dtype=np.float32)
        pairs.append((scenario, vec))
    return Dataset(manifest=manifest, locations=locations, segments=segments, pairs=pairs)


# ---------------------------------------------------------------------------
# Splitting


def split_dataset(pairs: list, spec: SplitSpec) -> tuple[list, list, list]:
    """Seed-deterministic permutation, then contiguous train/val/test slices."""
    total = spec.train + spec.val + spec.test
    if spec.train < 0 or spec.val < 0 or spec.test < 0 or total > len(pairs):
        raise DatasetError(f"split {spec.train}/{spec.val}/{spec.test} infeasible for {len(pairs)} samples")
    order = np.random.default_rng(spec.seed).permutation(len(pairs))
    picked = [pairs[i] for i in order]
    return (
        picked[: spec.train],
        picked[spec.train : spec.train + spec.val],
        picked[spec.train + spec.val : total],
    )


# ---------------------------------------------------------------------------
# Synthetic oracle


def _neighbor_fraction(scenario: ProtectionScenario, segment_id: int) -> float:
    neighbors = [s for s in (segment_id - 1, segment_id + 1) if 0 <= s < scenario.d_x]
    if not neighbors:
        return 0.0
    return sum(scenario.protected(s) for s in neighbors) / len(neighbors)


def base_depths(params: SynthOracleParams, n_locations: int) -> np.ndarray:
    """Per-location base depth, drawn once per location (id order)."""
    rng = np.random.default_rng((params.seed, _BASE_DEPTH_STREAM))
    return rng.uniform(params.base_min, params.base_max, size=n_locations)


def synth_oracle(
    scenario: ProtectionScenario,
    locations: list[CoastalLocation],
    segments: list[SegmentGeometry],
    params: SynthOracleParams,
) -> np.ndarray:
    """Toy peak-depth response: depth_i = max(0, base_i
    - alpha * protected(seg_i) + beta * protected_neighbor_fraction(seg_i)).

    Deterministic in (params.seed, location order); depths ordered by
    location id.
    """
    if scenario.d_x != len(segments):
        raise DatasetError(f"scenario has {scenario.d_x} bits but geometry has {len(segments)} segments")
    ordered = sorted(locations, key=lambda loc: loc.id)
    base = base_depths(params, len(ordered))
    out = np.empty(len(ordered), dtype=np.float32)
    for i, loc in enumerate(ordered):
        shield = params.alpha if scenario.protected(loc.segment_id) else 0.0
        spill = params.beta * _neighbor_fraction(scenario, loc.segment_id)
        out[i] = max(0.0, base[i] - shield + spill)
    return out


# ---------------------------------------------------------------------------
# Generation


def _synthetic_geometry(d_x: int, n_locations: int, seed: int) -> tuple[list[SegmentGeometry], list[CoastalLocation]]:
    """A gently curving west-east coastline split into d_x segments, with
    locations scattered just inshore of it."""
    rng = np.random.default_rng((seed, _GEOMETRY_STREAM))
    verts_per_segment = 4
    n_verts = d_x * verts_per_segment + 1
    xs = np.linspace(0.0, 1.0, n_verts)
    ys = 0.6 + 0.08 * np.sin(2 * math.pi * 1.5 * xs)
    segments = []
    for s in range(d_x):
        lo = s * verts_per_segment
        hi = lo + verts_per_segment + 1
        pts = tuple((float(x), float(y)) for x, y in zip(xs[lo:hi], ys[lo:hi]))
        segments.append(SegmentGeometry(segment_id=s, vertices=pts))
    locations = []
    for i in range(n_locations):
        lon = float(rng.uniform(0.0, 1.0))
        coast = 0.6 + 0.08 * math.sin(2 * math.pi * 1.5 * lon)
        lat = float(coast - rng.uniform(0.0, 0.25))  # inshore of the coastline
        loc = CoastalLocation(id=i, lon=lon, lat=lat, segment_id=0)
        sid = nearest_segment(loc, segments)
        locations.append(CoastalLocation(id=i, lon=lon, lat=lat, segment_id=sid))
    return segments, locations


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def generate_synthetic_dataset(
    d_x: int,
    n_locations: int,
    H: int,
    W: int,
    n_scenarios: int,
    params: SynthOracleParams,
    out_dir: str | Path,
) -> DatasetManifest:
    """Write a complete synthetic dataset directory.

    The scenario set starts with the deduplicated base scenarios and is
    topped up with random distinct ones; oracle depths are attached to
    each. The directory round-trips through load_dataset.
    """
    if n_scenarios > (1 << d_x):
        raise DatasetError(f"cannot draw {n_scenarios} distinct scenarios from a {d_x}-bit space")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "depths").mkdir(exist_ok=True)

    segments, locations = _synthetic_geometry(d_x, n_locations, params.seed)
    base = make_base_scenarios(d_x, dedup=True)[:n_scenarios]
    extra = random_scenarios(
        n_scenarios - len(base), d_x,
        seed=params.seed * 1009 + _SCENARIO_STREAM,
        exclusions=set(base),
    )
    scenarios = base + extra

    _write_csv(out_dir / "locations.csv", ["id", "lon", "lat", "segment_id"],
               [[loc.id, FLOAT_FMT % loc.lon, FLOAT_FMT % loc.lat, loc.segment_id] for loc in locations])
    seg_rows = []
    for seg in segments:
        for v_idx, (lon, lat) in enumerate(seg.vertices):
            seg_rows.append([seg.segment_id, v_idx, FLOAT_FMT % lon, FLOAT_FMT % lat])
    _write_csv(out_dir / "segments.csv", ["segment_id", "vertex_idx", "lon", "lat"], seg_rows)
    _write_csv(out_dir / "scenarios.csv", ["scenario_id", "bitstring"],
               [[f"s{idx:04d}", s.as_bitstring()] for idx, s in enumerate(scenarios)])
    for idx, s in enumerate(scenarios):
        depths = synth_oracle(s, locations, segments, params)
        _write_csv(out_dir / "depths" / f"s{idx:04d}.csv", ["location_id", "peak_depth_m"],
                   [[loc_id, FLOAT_FMT % float(d)] for loc_id, d in zip(sorted(loc.id for loc in locations), depths)])

    manifest = DatasetManifest(d_x=d_x, d_y=n_locations, H=H, W=W, n_scenarios=len(scenarios))
    (out_dir / "manifest.json").write_text(manifest.to_json())
    return manifest
