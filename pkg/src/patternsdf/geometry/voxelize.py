"""Solid voxelization of scenes and meshes on cell-center lattices.

Scenes use the sign of the analytic SDF at each cell center. Meshes cast an
axis-aligned ray per (y, z) cell row and classify centers by crossing
parity; grazing hits are retried under tiny jitter and rays whose total
crossing count stays odd raise, since odd parity means the surface is not
closed along that ray.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh


class VoxelizeError(ValueError):
    pass


@dataclass
class OccupancyGrid:
    occupied: np.ndarray  # (R, R, R) bool, [i, j, k] along (x, y, z)
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        self.occupied = np.asarray(self.occupied, dtype=bool)
        if self.occupied.ndim != 3:
            raise VoxelizeError("occupancy must be 3D")

    @property
    def resolution(self):
        return tuple(self.occupied.shape)

    def fraction(self) -> float:
        return float(self.occupied.mean())


def _cell_centers(res: int, lo: float, hi: float):
    cell = (hi - lo) / res
    return lo + cell * (np.arange(res) + 0.5), cell


def voxelize_scene(scene, res: int, lo: float = -1.0, hi: float = 1.0) -> OccupancyGrid:
    """Occupancy from SDF sign at cell centers: occupied iff sdf < 0."""
    centers, _ = _cell_centers(res, lo, hi)
    zz, yy, xx = np.meshgrid(centers, centers, centers, indexing="ij")
    pts = np.stack([xx, yy, zz], axis=-1).reshape(-1, 3)
    inside = scene.sdf(pts) < 0.0
    occupied = inside.reshape(res, res, res).transpose(2, 1, 0)
    return OccupancyGrid(occupied=occupied, lo=lo, hi=hi)


def _row_crossings(py, pz, tri_rows, tri_ids, verts2d, vert_x, eps):
    """X positions where per-row rays cross candidate triangles.

    py, pz: (P,) ray positions for each candidate pair.
    verts2d: (T, 3, 2) triangle vertices projected to (y, z).
    vert_x: (T, 3) triangle vertex x coordinates.
    Returns (cross_mask, cross_x, grazing_mask) over the P pairs.
    """
    a = verts2d[tri_ids, 0]
    b = verts2d[tri_ids, 1]
    c = verts2d[tri_ids, 2]
    p = np.stack([py, pz], axis=1)

    ab = b - a
    ac = c - a
    ap = p - a
    denom = ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0]
    wb_n = ap[:, 0] * ac[:, 1] - ap[:, 1] * ac[:, 0]
    wc_n = ab[:, 0] * ap[:, 1] - ab[:, 1] * ap[:, 0]

    degenerate = np.abs(denom) < 1e-300
    safe = np.where(degenerate, 1.0, denom)
    wb = wb_n / safe
    wc = wc_n / safe
    wa = 1.0 - wb - wc
    w = np.stack([wa, wb, wc], axis=1)

    strict = (w > eps).all(axis=1) & ~degenerate
    loose = (w > -eps).all(axis=1) & ~degenerate
    grazing = loose & ~strict
    # a degenerate (edge-on) projection can still graze the ray
    grazing |= degenerate

    xs = (w * vert_x[tri_ids]).sum(axis=1)
    return strict, xs, grazing


def voxelize_mesh(
    mesh: Mesh,
    res: int,
    lo: float = -1.0,
    hi: float = 1.0,
    max_attempts: int = 8,
) -> OccupancyGrid:
    """Occupancy of a closed mesh by x-ray crossing parity at cell centers.

    Raises VoxelizeError when some ray sees an odd number of crossings even
    after jitter, which indicates a hole in the surface.
    """
    centers, cell = _cell_centers(res, lo, hi)
    occupied = np.zeros((res, res, res), dtype=bool)
    if mesh.is_empty:
        return OccupancyGrid(occupied=occupied, lo=lo, hi=hi)

    tri_v = mesh.vertices[mesh.triangles]  # (T, 3, 3)
    verts2d = tri_v[:, :, 1:]
    vert_x = tri_v[:, :, 0]

    # candidate (row, triangle) pairs from projected bounding boxes
    t_lo = verts2d.min(axis=1)
    t_hi = verts2d.max(axis=1)
    pad = 1e-9 + 1e-5 * cell
    iy0 = np.clip(np.ceil((t_lo[:, 0] - pad - lo) / cell - 0.5), 0, res - 1).astype(int)
    iy1 = np.clip(np.floor((t_hi[:, 0] + pad - lo) / cell - 0.5), 0, res - 1).astype(int)
    iz0 = np.clip(np.ceil((t_lo[:, 1] - pad - lo) / cell - 0.5), 0, res - 1).astype(int)
    iz1 = np.clip(np.floor((t_hi[:, 1] + pad - lo) / cell - 0.5), 0, res - 1).astype(int)

    pair_rows = []
    pair_tris = []
    for t in range(len(tri_v)):
        ny = iy1[t] - iy0[t] + 1
        nz = iz1[t] - iz0[t] + 1
        if ny <= 0 or nz <= 0:
            continue
        ys = np.arange(iy0[t], iy1[t] + 1)
        zs = np.arange(iz0[t], iz1[t] + 1)
        rows = (ys[:, None] * res + zs[None, :]).ravel()
        pair_rows.append(rows)
        pair_tris.append(np.full(rows.shape, t, dtype=np.int64))
    if not pair_rows:
        return OccupancyGrid(occupied=occupied, lo=lo, hi=hi)
    pair_rows = np.concatenate(pair_rows)
    pair_tris = np.concatenate(pair_tris)

    eps = 1e-9
    row_y = centers[(np.arange(res * res) // res)]
    row_z = centers[(np.arange(res * res) % res)]

    pending = np.arange(res * res)
    jit_y = np.zeros(res * res)
    jit_z = np.zeros(res * res)
    rng = np.random.default_rng(1234)
    counts = np.zeros((res * res, res + 1), dtype=np.int64)

    order = np.argsort(pair_rows, kind="stable")
    pair_rows = pair_rows[order]
    pair_tris = pair_tris[order]
    row_starts = np.searchsorted(pair_rows, np.arange(res * res + 1))

    for attempt in range(max_attempts):
        # gather candidate pairs for pending rows
        sel = []
        for r in pending:
            sel.append(np.arange(row_starts[r], row_starts[r + 1]))
        sel = np.concatenate(sel) if sel else np.empty(0, dtype=int)
        if sel.size == 0:
            break
        rows = pair_rows[sel]
        tris = pair_tris[sel]
        py = row_y[rows] + jit_y[rows]
        pz = row_z[rows] + jit_z[rows]
        crossing, xs, grazing = _row_crossings(py, pz, rows, tris, verts2d, vert_x, eps)

        counts[pending] = 0
        hit_rows = rows[crossing]
        hit_cells = np.searchsorted(centers, xs[crossing])
        np.add.at(counts, (hit_rows, hit_cells), 1)

        bad = np.zeros(res * res, dtype=bool)
        np.logical_or.at(bad, rows[grazing], True)
        pending = pending[bad[pending]]
        if pending.size == 0:
            break
        scale = 1e-4 * cell * (attempt + 1)
        jit_y[pending] = rng.uniform(-scale, scale, size=pending.size)
        jit_z[pending] = rng.uniform(-scale, scale, size=pending.size)
    else:
        raise VoxelizeError(
            f"{pending.size} rays keep grazing the surface after {max_attempts} jitters; "
            "parity ambiguous (mesh may not be watertight)"
        )

    parity = np.cumsum(counts[:, :res], axis=1) % 2
    total = counts.sum(axis=1)
    odd = np.nonzero(total % 2)[0]
    if odd.size:
        iy, iz = divmod(int(odd[0]), res)
        raise VoxelizeError(
            f"{odd.size} rays crossed the surface an odd number of times "
            f"(first at row y={centers[iy]:.4f}, z={centers[iz]:.4f}); "
            "parity ambiguous, mesh is not watertight"
        )

    # rows enumerate (iy, iz); transpose [iy, iz, ix] -> [ix, iy, iz]
    occupied = (parity == 1).reshape(res, res, res).transpose(2, 0, 1)
    return OccupancyGrid(occupied=occupied, lo=lo, hi=hi)


def solid_voxelize(obj, res: int, lo: float = -1.0, hi: float = 1.0) -> OccupancyGrid:
    """Dispatch to scene or mesh voxelization."""
    if isinstance(obj, Mesh):
        return voxelize_mesh(obj, res, lo=lo, hi=hi)
    if hasattr(obj, "sdf"):
        return voxelize_scene(obj, res, lo=lo, hi=hi)
    raise VoxelizeError(f"cannot voxelize object of type {type(obj).__name__}")
