"""On-disk tensor store: a JSON manifest plus one float32 blob per tensor.

Layout of a store directory:
    manifest.json   -- format version, free-form metadata, tensor table
    tensors.bin     -- concatenated little-endian float32 blobs

Each manifest entry records name, shape, byte offset and length, so
every tensor owns a contiguous blob inside tensors.bin. Reload is
byte-exact: float32 in, the same float32 out.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["TensorStore", "write_store", "read_store", "store_fingerprint"]

STORE_VERSION = 1
MANIFEST_NAME = "manifest.json"
BLOB_NAME = "tensors.bin"


@dataclass
class TensorStore:
    """Named float32 arrays plus arbitrary JSON metadata."""

    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def write_store(path: str | Path, store: TensorStore) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    blobs = []
    offset = 0
    for name, arr in store.tensors.items():
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entries.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": "float32",
            "offset": offset,
            "nbytes": len(raw),
        })
        blobs.append(raw)
        offset += len(raw)
    manifest = {"format_version": STORE_VERSION, "meta": store.meta, "tensors": entries}
    (path / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True))
    (path / BLOB_NAME).write_bytes(b"".join(blobs))


def read_store(path: str | Path) -> TensorStore:
    path = Path(path)
    manifest = json.loads((path / MANIFEST_NAME).read_text())
    if manifest.get("format_version") != STORE_VERSION:
        raise ValueError(f"unsupported store version {manifest.get('format_version')}")
    blob = (path / BLOB_NAME).read_bytes()
    tensors: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        start = entry["offset"]
        raw = blob[start : start + entry["nbytes"]]
        if len(raw) != entry["nbytes"]:
            raise ValueError(f"tensor {entry['name']!r}: blob truncated")
        arr = np.frombuffer(raw, dtype="<f4").reshape(entry["shape"]).copy()
        tensors[entry["name"]] = arr
    return TensorStore(tensors=tensors, meta=manifest.get("meta", {}))


def store_fingerprint(path: str | Path) -> str:
    """SHA-256 over the manifest and blob bytes."""
    path = Path(path)
    h = hashlib.sha256()
    h.update((path / MANIFEST_NAME).read_bytes())
    h.update((path / BLOB_NAME).read_bytes())
    return h.hexdigest()
