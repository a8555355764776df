"""Isosurface extraction from dense SDF grids via marching cubes.

Classic 256-case algorithm: each grid cell gets a case index from the signs
of its eight corner values, the case tables list which edges the surface
crosses and how to stitch crossings into triangles, and crossing positions
come from linear interpolation of the two corner values. Vertices are
deduplicated by (cell, edge) key so shared edges produce shared vertices.
"""

from __future__ import annotations

import numpy as np

from ._mc_tables import EDGE_CORNERS, EDGE_CROSSINGS, TRIANGLE_EDGES
from .grid import SdfGrid
from .mesh import Mesh

_CORNER_OFFSETS = np.array(
    [
        (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
        (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
    ],
    dtype=np.int64,
)

# edge id -> (corner offset of endpoint A, axis along which the edge runs)
_EDGE_BASE_AXIS = []
for _a, _b in EDGE_CORNERS:
    _da = _CORNER_OFFSETS[_a]
    _db = _CORNER_OFFSETS[_b]
    _axis = int(np.nonzero(_da != _db)[0][0])
    _lo = _da if _da[_axis] < _db[_axis] else _db
    _EDGE_BASE_AXIS.append((tuple(int(v) for v in _lo), _axis))


def extract_mesh(grid: SdfGrid, level: float = 0.0) -> Mesh:
    """Triangulate the `level` isosurface of an SDF grid.

    Returns an empty mesh when no cell straddles the level. Degenerate
    triangles (two or more identical vertex indices) are dropped.
    """
    values = np.asarray(grid.values, dtype=np.float64)
    nx, ny, nz = values.shape
    if min(nx, ny, nz) < 2:
        return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    inside = values < level

    # case index per cell, bit c set when corner c is inside
    case = np.zeros((nx - 1, ny - 1, nz - 1), dtype=np.int32)
    for c, (dx, dy, dz) in enumerate(_CORNER_OFFSETS):
        corner = inside[dx : dx + nx - 1, dy : dy + ny - 1, dz : dz + nz - 1]
        case |= corner.astype(np.int32) << c

    active = np.argwhere((case != 0) & (case != 255))
    if len(active) == 0:
        return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    vertices = []
    vertex_ids = {}
    triangles = []
    origin = grid.origin
    spacing = grid.spacing

    def edge_vertex(i, j, k, edge):
        # canonical key: owning node of the lower endpoint plus edge axis
        (bx, by, bz), axis = _EDGE_BASE_AXIS[edge]
        key = (i + bx, j + by, k + bz, axis)
        vid = vertex_ids.get(key)
        if vid is not None:
            return vid
        x0 = np.array([i + bx, j + by, k + bz], dtype=np.float64)
        v0 = values[key[0], key[1], key[2]]
        x1 = x0.copy()
        x1[axis] += 1.0
        idx1 = [key[0], key[1], key[2]]
        idx1[axis] += 1
        v1 = values[idx1[0], idx1[1], idx1[2]]
        denom = v1 - v0
        t = 0.5 if denom == 0.0 else (level - v0) / denom
        t = min(max(t, 0.0), 1.0)
        pos = origin + spacing * (x0 + t * (x1 - x0))
        vid = len(vertices)
        vertices.append(pos)
        vertex_ids[key] = vid
        return vid

    for i, j, k in active:
        c = case[i, j, k]
        if EDGE_CROSSINGS[c] == 0:
            continue
        edges = TRIANGLE_EDGES[c]
        for t0 in range(0, len(edges), 3):
            va = edge_vertex(i, j, k, edges[t0])
            vb = edge_vertex(i, j, k, edges[t0 + 1])
            vc = edge_vertex(i, j, k, edges[t0 + 2])
            if va == vb or vb == vc or va == vc:
                continue
            triangles.append((va, vb, vc))

    if not triangles:
        return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    return Mesh(np.asarray(vertices), np.asarray(triangles, dtype=np.int64))
