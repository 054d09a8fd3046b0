"""Grid field dumps: raw little-endian float64 (C order) plus a JSON sidecar."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import GridDomain, build_grid

FORMAT_VERSION = 1


def write_field(stem, values: np.ndarray, grid: GridDomain, name: str, **meta) -> Path:
    """Write ``<stem>.bin`` and ``<stem>.json``; returns the sidecar path."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    arr = np.ascontiguousarray(values, dtype="<f8")
    if arr.shape != grid.shape:
        raise ValueError(f"field shape {arr.shape} does not match grid {grid.shape}")
    bin_path = stem.parent / (stem.name + ".bin")
    bin_path.write_bytes(arr.tobytes(order="C"))
    sidecar = {
        "format_version": FORMAT_VERSION,
        "field": name,
        "data_file": bin_path.name,
        "dtype": "<f8",
        "order": "C",
        "dims": list(grid.shape),
        "dim": grid.dim,
        "spacing": grid.spacing,
        "origin": list(grid.lo),
        "lo": list(grid.lo),
        "hi": list(grid.hi),
        "meta": meta,
    }
    json_path = stem.parent / (stem.name + ".json")
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return json_path


def read_field(sidecar_path) -> tuple[np.ndarray, GridDomain, dict]:
    sidecar_path = Path(sidecar_path)
    info = json.loads(sidecar_path.read_text())
    dims = tuple(info["dims"])
    if len(set(dims)) != 1:
        raise ValueError("only uniform node counts are supported")
    grid = build_grid(info["lo"], info["hi"], dims[0], info["dim"])
    if not np.isclose(grid.spacing, info["spacing"], rtol=1e-12):
        raise ValueError("sidecar spacing is inconsistent with lo/hi/dims")
    raw = (sidecar_path.parent / info["data_file"]).read_bytes()
    values = np.frombuffer(raw, dtype=info["dtype"]).reshape(dims, order=info["order"]).astype(float)
    return values, grid, info
