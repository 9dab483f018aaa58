"""Conversion between vector-form scenarios/depths and 2-D grid form.

The codec places each coastal location of interest into a cell of an
H x W raster by discretizing longitude/latitude over the locations'
bounding box (row 0 is the northernmost band). Scenario bits become a
three-class susceptibility grid over {-1, 0, +1}; depth vectors become
masked inundation grids and back. The mapping is injective: cell clashes
are resolved by relocating the later-id location to the nearest free
cell.

Distances are measured in raw (lon, lat) degree space, which preserves
relative ordering at city scale; pass a ``projection`` callable to
``nearest_segment`` where a projected metric matters.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CoastalLocation",
    "SegmentGeometry",
    "GridIndexMap",
    "SusceptibilityMap",
    "InundationMap",
    "GridCodecError",
    "build_index_map",
    "nearest_segment",
    "encode_susceptibility",
    "encode_inundation",
    "extract_depths",
    "write_grid",
    "read_grid",
    "write_mask",
    "read_mask",
]


class GridCodecError(ValueError):
    """Raised on capacity, consistency or dimension violations."""


@dataclass(frozen=True)
class CoastalLocation:
    """One nearshore point of interest.

    ``segment_id`` is the id of the shoreline segment nearest to the
    location; datasets precompute it with :func:`nearest_segment`.
    """

    id: int
    lon: float
    lat: float
    segment_id: int


@dataclass(frozen=True)
class SegmentGeometry:
    """Polyline geometry of one candidate protection segment."""

    segment_id: int
    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise GridCodecError(f"segment {self.segment_id} needs at least 2 vertices")


@dataclass(frozen=True)
class GridIndexMap:
    """Injective map from location id to grid index (i, j)."""

    H: int
    W: int
    entries: dict[int, tuple[int, int]]
    # Vectorized views, ordered by ascending location id.
    ids: np.ndarray = field(repr=False, default=None)
    rows: np.ndarray = field(repr=False, default=None)
    cols: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        ids = np.array(sorted(self.entries), dtype=np.int64)
        rc = np.array([self.entries[int(i)] for i in ids], dtype=np.int64).reshape(len(ids), 2)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "rows", rc[:, 0])
        object.__setattr__(self, "cols", rc[:, 1])

    @property
    def d_y(self) -> int:
        return len(self.entries)


@dataclass
class SusceptibilityMap:
    """H x W class grid over {-1, 0, +1}; 0 is background."""

    grid: np.ndarray  # int8

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.int8)
        if self.grid.ndim != 2:
            raise GridCodecError("susceptibility grid must be 2-D")

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape


@dataclass
class InundationMap:
    """H x W non-negative depth grid plus a validity mask over mapped cells."""

    grid: np.ndarray  # float32
    mask: np.ndarray  # bool

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float32)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.grid.shape != self.mask.shape:
            raise GridCodecError("depth grid and mask shapes differ")


def _bin_indices(locations, H: int, W: int) -> list[tuple[int, int]]:
    lons = np.array([loc.lon for loc in locations], dtype=np.float64)
    lats = np.array([loc.lat for loc in locations], dtype=np.float64)
    lon_min, lon_max = lons.min(), lons.max()
    lat_min, lat_max = lats.min(), lats.max()
    lon_span = lon_max - lon_min
    lat_span = lat_max - lat_min
    out = []
    for lon, lat in zip(lons, lats):
        j = 0 if lon_span == 0 else min(int((lon - lon_min) / lon_span * W), W - 1)
        # Row 0 holds the maximum latitude.
        i = 0 if lat_span == 0 else min(int((lat_max - lat) / lat_span * H), H - 1)
        out.append((i, j))
    return out


def _nearest_free_cell(taken: np.ndarray, i0: int, j0: int) -> tuple[int, int]:
    """Closest unoccupied cell by squared Euclidean grid distance.

    Ties break on smaller i, then smaller j. Scans Chebyshev rings
    outward; a ring at radius r cannot beat a best candidate with
    d^2 < r^2, which bounds the scan.
    """
    H, W = taken.shape
    best = None  # (d2, i, j)
    r = 0
    max_r = max(H, W)
    while r <= max_r:
        if best is not None and r * r > best[0]:
            break
        cells = []
        if r == 0:
            cells.append((i0, j0))
        else:
            for j in range(j0 - r, j0 + r + 1):
                cells.append((i0 - r, j))
                cells.append((i0 + r, j))
            for i in range(i0 - r + 1, i0 + r):
                cells.append((i, j0 - r))
                cells.append((i, j0 + r))
        for i, j in cells:
            if 0 <= i < H and 0 <= j < W and not taken[i, j]:
                d2 = (i - i0) ** 2 + (j - j0) ** 2
                cand = (d2, i, j)
                if best is None or cand < best:
                    best = cand
        r += 1
    if best is None:
        raise GridCodecError("no free cell left in the grid")
    return best[1], best[2]


def build_index_map(locations: list[CoastalLocation], H: int, W: int) -> GridIndexMap:
    """Discretize locations onto an H x W grid, injectively.

    Locations are processed in ascending id order; when a location's bin
    is already occupied, it moves to the nearest free cell (squared
    Euclidean grid distance, ties toward smaller i then j).
    """
    if H < 2 or W < 2:
        raise GridCodecError("grid must be at least 2 x 2")
    if len(locations) > H * W:
        raise GridCodecError(f"{len(locations)} locations cannot fit into a {H}x{W} grid")
    ids = [loc.id for loc in locations]
    if len(set(ids)) != len(ids):
        raise GridCodecError("location ids must be unique")
    order = np.argsort(ids, kind="stable")
    bins = _bin_indices(locations, H, W)
    taken = np.zeros((H, W), dtype=bool)
    entries: dict[int, tuple[int, int]] = {}
    for idx in order:
        i, j = bins[idx]
        if taken[i, j]:
            i, j = _nearest_free_cell(taken, i, j)
        taken[i, j] = True
        entries[ids[idx]] = (i, j)
    return GridIndexMap(H=H, W=W, entries=entries)


def _point_to_polyline_d2(px: float, py: float, vertices) -> float:
    v = np.asarray(vertices, dtype=np.float64)
    a = v[:-1]
    b = v[1:]
    ab = b - a
    ap = np.array([px, py]) - a
    denom = (ab * ab).sum(axis=1)
    t = np.zeros(len(a))
    nz = denom > 0
    t[nz] = np.clip((ap[nz] * ab[nz]).sum(axis=1) / denom[nz], 0.0, 1.0)
    closest = a + t[:, None] * ab
    d2 = ((np.array([px, py]) - closest) ** 2).sum(axis=1)
    return float(d2.min())


def nearest_segment(location: CoastalLocation, segments: list[SegmentGeometry], projection=None) -> int:
    """Id of the segment whose polyline is closest to the location.

    Ties break toward the smaller segment id. ``projection`` optionally
    maps (lon, lat) -> (x, y) before measuring distances.
    """
    if not segments:
        raise GridCodecError("no segments given")
    proj = projection if projection is not None else lambda lon, lat: (lon, lat)
    px, py = proj(location.lon, location.lat)
    best_id = None
    best_d2 = None
    for seg in sorted(segments, key=lambda s: s.segment_id):
        verts = [proj(lon, lat) for lon, lat in seg.vertices]
        d2 = _point_to_polyline_d2(px, py, verts)
        if best_d2 is None or d2 < best_d2:
            best_d2 = d2
            best_id = seg.segment_id
    return best_id


def encode_susceptibility(scenario, locations: list[CoastalLocation], index_map: GridIndexMap) -> SusceptibilityMap:
    """Scenario bits -> class grid: +1 near protected segments, -1 near
    unprotected ones, 0 background."""
    grid = np.zeros((index_map.H, index_map.W), dtype=np.int8)
    for loc in locations:
        if loc.segment_id >= scenario.d_x or loc.segment_id < 0:
            raise GridCodecError(f"location {loc.id} references segment {loc.segment_id} outside [0, {scenario.d_x})")
        try:
            i, j = index_map.entries[loc.id]
        except KeyError:
            raise GridCodecError(f"index map has no entry for location id {loc.id}") from None
        grid[i, j] = 1 if scenario.protected(loc.segment_id) else -1
    return SusceptibilityMap(grid=grid)


def encode_inundation(depths: np.ndarray, index_map: GridIndexMap) -> InundationMap:
    """Depth vector (ordered by location id) -> masked depth grid."""
    depths = np.asarray(depths, dtype=np.float32)
    if depths.shape != (index_map.d_y,):
        raise GridCodecError(f"depth vector length {depths.shape} does not match the {index_map.d_y} mapped locations")
    grid = np.zeros((index_map.H, index_map.W), dtype=np.float32)
    mask = np.zeros((index_map.H, index_map.W), dtype=bool)
    grid[index_map.rows, index_map.cols] = depths
    mask[index_map.rows, index_map.cols] = True
    return InundationMap(grid=grid, mask=mask)


def extract_depths(inundation: InundationMap, index_map: GridIndexMap) -> np.ndarray:
    """Masked grid -> depth vector ordered by location id.

    Negative grid values pass through unchanged; clamping is a model
    post-process, not a codec concern.
    """
    if inundation.grid.shape != (index_map.H, index_map.W):
        raise GridCodecError(f"grid shape {inundation.grid.shape} does not match index map {(index_map.H, index_map.W)}")
    return inundation.grid[index_map.rows, index_map.cols].astype(np.float32)


# ---------------------------------------------------------------------------
# Binary serialization. Little-endian throughout. Grids: 8 uint32 header
# words (magic, version, H, W, d_y, 3 reserved) then row-major float32
# cells. Masks: same header then a row-major bitset, LSB-first per byte.

GRID_MAGIC = 0x44524746  # b"FGRD"
MASK_MAGIC = 0x4B534D46  # b"FMSK"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<8I")


def _pack_header(magic: int, H: int, W: int, d_y: int) -> bytes:
    return _HEADER.pack(magic, FORMAT_VERSION, H, W, d_y, 0, 0, 0)


def _unpack_header(data: bytes, expected_magic: int) -> tuple[int, int, int]:
    if len(data) < _HEADER.size:
        raise GridCodecError("truncated grid header")
    magic, version, H, W, d_y, *_ = _HEADER.unpack_from(data)
    if magic != expected_magic:
        raise GridCodecError(f"bad magic 0x{magic:08x}")
    if version != FORMAT_VERSION:
        raise GridCodecError(f"unsupported format version {version}")
    return H, W, d_y


def write_grid(grid: np.ndarray, d_y: int) -> bytes:
    grid = np.asarray(grid, dtype="<f4")
    H, W = grid.shape
    return _pack_header(GRID_MAGIC, H, W, d_y) + grid.tobytes(order="C")


def read_grid(data: bytes) -> tuple[np.ndarray, int]:
    H, W, d_y = _unpack_header(data, GRID_MAGIC)
    body = np.frombuffer(data, dtype="<f4", offset=_HEADER.size, count=H * W)
    return body.reshape(H, W).copy(), d_y


def write_mask(mask: np.ndarray, d_y: int) -> bytes:
    mask = np.asarray(mask, dtype=bool)
    H, W = mask.shape
    bits = np.packbits(mask.reshape(-1), bitorder="little")
    return _pack_header(MASK_MAGIC, H, W, d_y) + bits.tobytes()


def read_mask(data: bytes) -> tuple[np.ndarray, int]:
    H, W, d_y = _unpack_header(data, MASK_MAGIC)
    n_bytes = (H * W + 7) // 8
    packed = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size, count=n_bytes)
    flat = np.unpackbits(packed, bitorder="little")[: H * W]
    return flat.reshape(H, W).astype(bool), d_y
