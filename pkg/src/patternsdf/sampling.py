"""Two-stage ground-truth sampling: band rejection then farthest-point
thinning, plus the dense test-time grid.

Stage 1 draws equal point counts from four signed-distance bands around the
surface by rejection from uniform proposals in [-1,1]^3. Stage 2 selects a
well-spread subset by greedy max-min (farthest point) sampling. Each band
consumes an independent spawned RNG stream so band results never shift when
another band's acceptance rate changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry.grid import grid_points

SDF_BANDS = ((-0.10, -0.03), (-0.03, 0.00), (0.00, 0.03), (0.03, 0.10))
STAGE1_COUNT = 32768
STAGE2_COUNT = 2048
PROPOSAL_BUDGET_FACTOR = 1000


class SamplingError(ValueError):
    pass


@dataclass
class SampleSet:
    positions: np.ndarray  # (N, 3)
    sdf: np.ndarray  # (N,)
    stage1_count: int = STAGE1_COUNT
    stage2_count: int = STAGE2_COUNT

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        self.sdf = np.asarray(self.sdf, dtype=np.float64).reshape(-1)
        if len(self.positions) != len(self.sdf):
            raise SamplingError("positions and sdf lengths differ")

    def __len__(self):
        return len(self.positions)


def band_sample(scene, count: int = STAGE1_COUNT, rng_seed: int = 0,
                bands=SDF_BANDS, grid_res: int = None):
    """Stage-1 sampling: count/4 points whose sdf falls in each band.

    grid_res restricts proposals to the nodes of a grid_res^3 lattice over
    [-1,1]^3 for compatibility with grid-based pipelines; default proposals
    are continuous. Raises SamplingError naming the first band that stays
    empty after the proposal budget.
    """
    if count % len(bands) != 0:
        raise SamplingError(f"count {count} not divisible by {len(bands)}")
    per_band = count // len(bands)
    budget = PROPOSAL_BUDGET_FACTOR * per_band
    streams = np.random.SeedSequence(rng_seed).spawn(len(bands))

    all_pts = []
    all_sdf = []
    for (lo, hi), seq in zip(bands, streams):
        rng = np.random.default_rng(seq)
        got_pts = []
        got_sdf = []
        have = 0
        used = 0
        while have < per_band:
            chunk = min(max(4 * per_band, 4096), budget - used)
            if chunk <= 0:
                raise SamplingError(
                    f"band [{lo}, {hi}] still has {per_band - have} missing points "
                    f"after {budget} proposals; shape too thin for this band"
                )
            if grid_res is None:
                props = rng.uniform(-1.0, 1.0, size=(chunk, 3))
            else:
                idx = rng.integers(0, grid_res, size=(chunk, 3))
                props = -1.0 + 2.0 * idx / (grid_res - 1)
            used += chunk
            vals = scene.sdf(props)
            keep = (vals >= lo) & (vals <= hi)
            got_pts.append(props[keep])
            got_sdf.append(vals[keep])
            have += int(keep.sum())
        pts = np.concatenate(got_pts)[:per_band]
        sdf = np.concatenate(got_sdf)[:per_band]
        all_pts.append(pts)
        all_sdf.append(sdf)
    return np.concatenate(all_pts), np.concatenate(all_sdf)


def farthest_point_sample(points, k: int, start_index: int = 0):
    """Greedy max-min subset: indices of k points, each chosen to maximize
    its distance to the already-chosen set. Ties resolve to the lowest index.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if k > n:
        raise SamplingError(f"cannot pick {k} from {n} points")
    if k <= 0:
        return np.empty(0, dtype=np.int64)
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = start_index
    dist = np.linalg.norm(points - points[start_index], axis=1)
    for i in range(1, k):
        nxt = int(np.argmax(dist))
        chosen[i] = nxt
        cand = np.linalg.norm(points - points[nxt], axis=1)
        np.minimum(dist, cand, out=dist)
    return chosen


def two_stage_sample(scene, rng_seed: int = 0, stage1_count: int = STAGE1_COUNT,
                     stage2_count: int = STAGE2_COUNT, grid_res: int = None) -> SampleSet:
    """Full training-point sampler: band rejection then FPS thinning."""
    pts, sdf = band_sample(scene, stage1_count, rng_seed=rng_seed, grid_res=grid_res)
    idx = farthest_point_sample(pts, stage2_count)
    return SampleSet(
        positions=pts[idx],
        sdf=sdf[idx],
        stage1_count=stage1_count,
        stage2_count=stage2_count,
    )


def test_grid(res: int = 65):
    """res^3 evaluation points spanning [-1,1]^3 inclusive, x fastest."""
    if res < 2:
        raise SamplingError("test grid needs res >= 2")
    pts, _, _ = grid_points(res)
    return pts


def save_samples(samples: SampleSet, path) -> None:
    """Single-file format: compact JSON header line + raw <f4 records."""
    header = {
        "version": 1,
        "count": len(samples),
        "fields": ["x", "y", "z", "sdf"],
        "dtype": "<f4",
        "stage1_count": samples.stage1_count,
        "stage2_count": samples.stage2_count,
    }
    records = np.column_stack([samples.positions, samples.sdf]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("ascii") + b"\n")
        fh.write(records.tobytes())


def load_samples(path) -> SampleSet:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode("ascii"))
    if header.get("dtype") != "<f4" or header.get("fields") != ["x", "y", "z", "sdf"]:
        raise SamplingError(f"unsupported sample file layout in {path}")
    records = np.frombuffer(raw[nl + 1 :], dtype="<f4")
    count = header["count"]
    if records.size != count * 4:
        raise SamplingError(
            f"sample blob has {records.size} floats, expected {count * 4}"
        )
    records = records.reshape(count, 4)
    return SampleSet(
        positions=records[:, :3],
        sdf=records[:, 3],
        stage1_count=header.get("stage1_count", STAGE1_COUNT),
        stage2_count=header.get("stage2_count", STAGE2_COUNT),
    )
