"""Dense SDF grids on a regular lattice, with a raw-plus-sidecar file format.

Layout contract: `values[i, j, k]` is the field at
`origin + (i, j, k) * spacing`, and the raw blob on disk stores little-endian
float32 with x varying fastest (Fortran ravel order).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GridError(ValueError):
    pass


@dataclass
class SdfGrid:
    values: np.ndarray
    origin: np.ndarray
    spacing: float

    def __post_init__(self):
        self.values = np.asarray(self.values)
        self.origin = np.asarray(self.origin, dtype=np.float64)
        if self.values.ndim != 3:
            raise GridError(f"grid values must be 3D, got shape {self.values.shape}")
        if self.spacing <= 0:
            raise GridError(f"grid spacing must be positive, got {self.spacing}")

    @property
    def resolution(self):
        return tuple(self.values.shape)

    def coordinates(self):
        """World coordinates of every grid node, shape (*resolution, 3)."""
        axes = [
            self.origin[d] + self.spacing * np.arange(self.values.shape[d])
            for d in range(3)
        ]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def grid_points(resolution: int, lo: float = -1.0, hi: float = 1.0):
    """Node coordinates of a cubic lattice spanning [lo, hi]^3.

    Returns (points, origin, spacing) where points is (resolution**3, 3)
    with x varying fastest.
    """
    if resolution < 2:
        raise GridError("resolution must be at least 2")
    spacing = (hi - lo) / (resolution - 1)
    axis = lo + spacing * np.arange(resolution)
    zz, yy, xx = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.stack([xx, yy, zz], axis=-1).reshape(-1, 3)
    return pts, np.full(3, lo), spacing


def sample_grid(scene, resolution: int, lo: float = -1.0, hi: float = 1.0) -> SdfGrid:
    """Evaluate a scene SDF on a cubic lattice spanning [lo, hi]^3."""
    pts, origin, spacing = grid_points(resolution, lo, hi)
    vals = scene.sdf(pts)
    # pts enumerate x fastest, so an (z, y, x) reshape then transpose gives
    # values[i, j, k] indexed by (x, y, z)
    values = vals.reshape(resolution, resolution, resolution).transpose(2, 1, 0)
    return SdfGrid(values=values, origin=origin, spacing=spacing)


def save_grid(grid: SdfGrid, path) -> None:
    """Write `<path>` (raw <f4 blob, x fastest) and `<path>.json` sidecar."""
    path = Path(path)
    blob = np.asarray(grid.values, dtype="<f4").ravel(order="F")
    path.write_bytes(blob.tobytes())
    meta = {
        "resolution": list(grid.resolution),
        "origin": [float(v) for v in grid.origin],
        "spacing": float(grid.spacing),
        "dtype": "<f4",
        "order": "x-fastest",
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=1))


def load_grid(path) -> SdfGrid:
    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    if not sidecar.exists():
        raise GridError(f"missing grid sidecar {sidecar}")
    meta = json.loads(sidecar.read_text())
    if meta.get("dtype") != "<f4":
        raise GridError(f"unsupported grid dtype {meta.get('dtype')!r}")
    res = tuple(int(r) for r in meta["resolution"])
    blob = np.frombuffer(path.read_bytes(), dtype="<f4")
    if blob.size != res[0] * res[1] * res[2]:
        raise GridError(
            f"grid blob has {blob.size} values, expected {res[0] * res[1] * res[2]}"
        )
    values = blob.reshape(res, order="F")
    return SdfGrid(values=values, origin=np.asarray(meta["origin"]), spacing=float(meta["spacing"]))
