"""Reconstruction quality metrics and pattern offset statistics.

Chamfer distance uses the squared-distance convention: the sum of both
directional means of squared nearest-neighbor distances. Earth mover's
distance is the mean cost of an optimal (or near-optimal) one-to-one
matching between equal-size point sets. IoU compares solid occupancy
grids. Reported values follow the usual scaling: CD x1000, EMD x100,
IoU in percent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

EMD_EXACT_LIMIT = 512


class MetricsError(ValueError):
    pass


def _point_set(points, name: str) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise MetricsError(f"{name} must be an (N, 3) point set, got {pts.shape}")
    if len(pts) == 0:
        raise MetricsError(f"{name} is empty")
    return pts


def chamfer(a, b) -> float:
    """Symmetric Chamfer distance (raw, not scaled).

    mean over a of min squared distance to b, plus the reverse direction.
    """
    a = _point_set(a, "a")
    b = _point_set(b, "b")
    d_ab = cKDTree(b).query(a)[0]
    d_ba = cKDTree(a).query(b)[0]
    return float(np.mean(d_ab ** 2) + np.mean(d_ba ** 2))


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # direct differences, blocked: the expanded |a|^2+|b|^2-2ab form cancels
    # catastrophically near zero and breaks the emd(X, X) == 0 identity
    out = np.empty((len(a), len(b)))
    step = max(1, (1 << 22) // max(len(b), 1))
    for i in range(0, len(a), step):
        diff = a[i : i + step, None, :] - b[None, :, :]
        out[i : i + step] = np.sqrt(np.sum(diff * diff, axis=2))
    return out


def _auction_assignment(cost: np.ndarray) -> np.ndarray:
    """Near-optimal assignment by forward auction with epsilon scaling.

    Returns object_of_person; the final epsilon bounds the mean matched
    cost within a 1e-4 fraction of the cost spread above the optimum.
    """
    n = cost.shape[0]
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    benefit = -cost
    spread = float(cost.max() - cost.min())
    if spread == 0.0:
        return np.arange(n, dtype=np.int64)
    eps_min = spread * 1e-4
    eps = spread / 2.0
    prices = np.zeros(n)
    while True:
        owner = np.full(n, -1, dtype=np.int64)
        assigned = np.full(n, -1, dtype=np.int64)
        while True:
            pool = np.flatnonzero(assigned < 0)
            if pool.size == 0:
                break
            vals = benefit[pool] - prices[None, :]
            rows = np.arange(pool.size)
            j1 = np.argmax(vals, axis=1)
            w1 = vals[rows, j1]
            vals[rows, j1] = -np.inf
            w2 = np.max(vals, axis=1)
            bids = w1 - w2 + eps
            # highest bid per contested object wins; ties go to the last
            # person in lexsort order, which is deterministic
            order = np.lexsort((bids, j1))
            j_sorted = j1[order]
            last = np.flatnonzero(np.r_[j_sorted[1:] != j_sorted[:-1], True])
            win = order[last]
            objects = j1[win]
            persons = pool[win]
            prices[objects] += bids[win]
            displaced = owner[objects]
            assigned[displaced[displaced >= 0]] = -1
            owner[objects] = persons
            assigned[persons] = objects
        if eps <= eps_min:
            return assigned
        eps = max(eps / 7.0, eps_min)


def emd(a, b, mode: str = "auto") -> float:
    """Earth mover's distance (raw): mean optimally matched Euclidean cost.

    exact solves the assignment with the Hungarian method; approx runs the
    auction and is the default above EMD_EXACT_LIMIT points. The approx
    cost is always >= the exact cost (it describes a feasible matching).
    """
    a = _point_set(a, "a")
    b = _point_set(b, "b")
    if len(a) != len(b):
        raise MetricsError(f"emd needs equal-size sets, got {len(a)} vs {len(b)}")
    if mode not in ("auto", "exact", "approx"):
        raise MetricsError(f"unknown emd mode {mode!r}")
    if mode == "auto":
        mode = "exact" if len(a) <= EMD_EXACT_LIMIT else "approx"
    cost = _pairwise_distances(a, b)
    if mode == "exact":
        rows, cols = linear_sum_assignment(cost)
        return float(cost[rows, cols].mean())
    cols = _auction_assignment(cost)
    return float(cost[np.arange(len(a)), cols].mean())


def _occupancy(grid, name: str) -> np.ndarray:
    occ = getattr(grid, "occupied", grid)
    occ = np.asarray(occ)
    if occ.dtype != bool or occ.ndim != 3:
        raise MetricsError(f"{name} must be a 3D boolean occupancy grid")
    return occ


def iou(a, b) -> float:
    """Intersection over union of two occupancy grids, in percent.

    Two empty grids are identical, so empty/empty is 100 by definition.
    """
    a = _occupancy(a, "a")
    b = _occupancy(b, "b")
    if a.shape != b.shape:
        raise MetricsError(f"grid shapes differ: {a.shape} vs {b.shape}")
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 100.0
    return 100.0 * np.count_nonzero(a & b) / union


@dataclass
class MetricsReport:
    """Scaled metric triple for one reconstruction."""

    cd: float  # Chamfer x1000
    emd: float  # EMD x100
    iou: float  # percent
    point_count: int = 2048
    voxel_res: int = 64

    def __post_init__(self):
        if self.cd < 0 or self.emd < 0:
            raise MetricsError("cd and emd must be nonnegative")
        if not 0.0 <= self.iou <= 100.0:
            raise MetricsError(f"iou out of range: {self.iou}")

    def to_dict(self) -> dict:
        return {
            "cd": self.cd,
            "emd": self.emd,
            "iou": self.iou,
            "point_count": self.point_count,
            "voxel_res": self.voxel_res,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            cd=d["cd"],
            emd=d["emd"],
            iou=d["iou"],
            point_count=d.get("point_count", 2048),
            voxel_res=d.get("voxel_res", 64),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def compute_report(
    pred_points,
    gt_points,
    pred_occupancy,
    gt_occupancy,
    emd_mode: str = "auto",
) -> MetricsReport:
    """Bundle the three metrics with their reporting scales applied."""
    pred_points = _point_set(pred_points, "pred_points")
    occ = _occupancy(pred_occupancy, "pred_occupancy")
    return MetricsReport(
        cd=1000.0 * chamfer(pred_points, gt_points),
        emd=100.0 * emd(pred_points, gt_points, mode=emd_mode),
        iou=iou(pred_occupancy, gt_occupancy),
        point_count=len(pred_points),
        voxel_res=occ.shape[0],
    )


def pattern_offset_stats(model, probe_points) -> np.ndarray:
    """Mean learned offset magnitude per pattern index over probe points.

    Returns an (n,) array; identically zero for the rigid pattern and for
    a freshly initialized generator.
    """
    probes = _point_set(probe_points, "probe_points")
    offsets = model.pattern_offsets(probes)  # (P, n, 3)
    return np.linalg.norm(offsets, axis=2).mean(axis=0)


def write_offset_csv(path, stats) -> None:
    stats = np.asarray(stats, dtype=np.float64)
    lines = ["pattern_index,mean_offset"]
    lines += [f"{i},{v:.9g}" for i, v in enumerate(stats, start=1)]
    Path(path).write_text("\n".join(lines) + "\n")


def format_offset_table(stats) -> str:
    stats = np.asarray(stats, dtype=np.float64)
    rows = [f"  p{i}: {v:.6f}" for i, v in enumerate(stats, start=1)]
    return "pattern point mean offsets\n" + "\n".join(rows)
