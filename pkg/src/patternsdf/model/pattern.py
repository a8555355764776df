"""Initial spatial pattern points around a query position.

The uniform pattern places the six face centers of an axis-aligned cube of
edge l around the query. The non-uniform patterns reflect the query across
combinations of coordinate planes, so their spread scales with the query's
distance from the origin; the rigid variant keeps the three reflections that
stay fixed under the generator in the full method and never trains offsets.
"""

from __future__ import annotations

import numpy as np

from .config import PatternConfig

# sign triples for the reflection-based patterns, applied as p * signs
_NONUNIFORM6 = np.array(
    [
        (1, 1, -1),
        (-1, 1, 1),
        (1, -1, 1),
        (-1, -1, 1),
        (1, -1, -1),
        (-1, 1, -1),
    ],
    dtype=np.float64,
)
_RIGID3 = np.array([(1, 1, -1), (-1, 1, 1), (-1, 1, -1)], dtype=np.float64)


def init_pattern(points, cfg: PatternConfig) -> np.ndarray:
    """Initial pattern points for queries (P, 3) (or a single (3,) point).

    Returns (P, n, 3) in the fixed order p1..pn; a single query yields
    (n, 3).
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)

    if cfg.kind == "uniform-6p":
        half = cfg.l / 2.0
        offsets = np.array(
            [
                (0, 0, half),
                (half, 0, 0),
                (0, half, 0),
                (0, 0, -half),
                (-half, 0, 0),
                (0, -half, 0),
            ]
        )
        out = pts[:, None, :] + offsets[None, :, :]
    elif cfg.kind == "non-uniform-6p":
        out = pts[:, None, :] * _NONUNIFORM6[None, :, :]
    elif cfg.kind == "non-uniform-3p":
        out = pts[:, None, :] * _NONUNIFORM6[None, :3, :]
    else:  # rigid-3p
        out = pts[:, None, :] * _RIGID3[None, :, :]
    return out[0] if single else out
