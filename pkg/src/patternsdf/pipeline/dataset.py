"""Synthetic dataset generation: scenes, renders, cameras, SDF samples.

A dataset directory holds one subdirectory per scene with the normalized
scene JSON, one SampleSet file shared by that scene's views, and a PNG plus
camera JSON per view, all indexed by a versioned manifest. Regeneration
with the same seed is byte-identical.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..camera import CameraPose, DEFAULT_FOCAL, DEFAULT_SIZE, look_at
from ..geometry import Box, Capsule, SdfScene, Sphere, Union, normalize_scene
from ..render import Image, load_png, render, save_png
from ..sampling import STAGE1_COUNT, STAGE2_COUNT, SampleSet, SamplingError, load_samples, save_samples, two_stage_sample

MAX_VIEWS = 24
VIEW_RADIUS = 2.2
_ELEVATIONS = (0.35, 0.12, 0.55, 0.25)


class DatasetError(ValueError):
    pass


@dataclass
class TrainSample:
    image: Image
    pose: CameraPose
    samples: SampleSet
    scene_id: str
    view_id: int


@dataclass
class Dataset:
    root: Path
    manifest: dict
    samples: list
    scenes: dict  # scene_id -> SdfScene

    def __len__(self):
        return len(self.samples)


def random_scene(seed) -> SdfScene:
    """A chunky union of 2-4 overlapping primitives, normalized.

    Parts cluster around the origin so the union stays connected; thin
    geometry is avoided to keep the interior SDF bands reachable.
    """
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(int(rng.integers(2, 5))):
        kind = rng.choice(("box", "sphere", "capsule"))
        center = rng.uniform(-0.35, 0.35, 3)
        if kind == "box":
            parts.append(Box(center=center, half_extents=rng.uniform(0.18, 0.45, 3)))
        elif kind == "sphere":
            parts.append(Sphere(center=center, radius=float(rng.uniform(0.22, 0.45))))
        else:
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            half = 0.5 * float(rng.uniform(0.35, 0.8))
            parts.append(
                Capsule(a=center - half * axis, b=center + half * axis,
                        radius=float(rng.uniform(0.16, 0.3)))
            )
    root = parts[0] if len(parts) == 1 else Union(*parts)
    return normalize_scene(SdfScene(root))


def view_poses(count: int, seed, radius: float = VIEW_RADIUS,
               focal: float = DEFAULT_FOCAL, image_size=DEFAULT_SIZE) -> list:
    """Up to MAX_VIEWS cameras on a ring around the scene, looking at it."""
    if not 1 <= count <= MAX_VIEWS:
        raise DatasetError(f"views per scene must be in [1, {MAX_VIEWS}], got {count}")
    rng = np.random.default_rng(seed)
    offset = float(rng.uniform(0.0, 2.0 * np.pi))
    poses = []
    for k in range(count):
        azimuth = offset + 2.0 * np.pi * k / MAX_VIEWS
        elevation = _ELEVATIONS[k % len(_ELEVATIONS)]
        eye = radius * np.array(
            [
                np.cos(azimuth) * np.cos(elevation),
                np.sin(elevation),
                np.sin(azimuth) * np.cos(elevation),
            ]
        )
        poses.append(look_at(eye, (0.0, 0.0, 0.0), focal=focal, image_size=image_size))
    return poses


def _scene_stream(seed, attempt: int):
    ss = np.random.SeedSequence([int(seed), int(attempt)])
    state = ss.generate_state(2)
    return int(state[0]), int(state[1])


def dataset_gen(
    out_dir,
    scenes: int = 8,
    views: int = 4,
    seed: int = 0,
    stage1_count: int = STAGE1_COUNT,
    sample_count: int = STAGE2_COUNT,
    image_size=DEFAULT_SIZE,
    focal: float = DEFAULT_FOCAL,
) -> dict:
    """Generate and write a dataset; returns the manifest dict.

    A scene whose SDF bands cannot be filled is skipped with a warning and
    a fresh candidate takes its place, so the requested counts are met.
    """
    if scenes < 1:
        raise DatasetError(f"need at least one scene, got {scenes}")
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": 1,
        "seed": int(seed),
        "image_size": list(image_size),
        "focal": focal,
        "sample_count": int(sample_count),
        "scenes": [],
    }
    made = 0
    attempt = 0
    while made < scenes:
        if attempt >= 16 * scenes:
            raise DatasetError(
                f"exhausted {attempt} candidate scenes while building {scenes}"
            )
        scene_seed, sample_seed = _scene_stream(seed, attempt)
        attempt += 1
        scene = random_scene(scene_seed)
        try:
            samples = two_stage_sample(
                scene, rng_seed=sample_seed,
                stage1_count=stage1_count, stage2_count=sample_count,
            )
        except SamplingError as exc:
            warnings.warn(f"skipping thin scene (candidate {attempt - 1}): {exc}")
            continue
        scene_id = f"scene_{made:03d}"
        scene_dir = root / "scenes" / scene_id
        scene_dir.mkdir(parents=True, exist_ok=True)
        scene.save(scene_dir / "scene.json")
        save_samples(samples, scene_dir / "samples.bin")
        entry = {
            "id": scene_id,
            "scene": f"scenes/{scene_id}/scene.json",
            "samples": f"scenes/{scene_id}/samples.bin",
            "views": [],
        }
        poses = view_poses(views, seed=scene_seed, focal=focal, image_size=image_size)
        for v, pose in enumerate(poses):
            image = render(scene, pose)
            save_png(image, scene_dir / f"view_{v:02d}.png")
            pose.save(scene_dir / f"view_{v:02d}.camera.json")
            entry["views"].append(
                {
                    "id": v,
                    "image": f"scenes/{scene_id}/view_{v:02d}.png",
                    "camera": f"scenes/{scene_id}/view_{v:02d}.camera.json",
                }
            )
        manifest["scenes"].append(entry)
        made += 1
    (root / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


def load_dataset(root) -> Dataset:
    """Read a generated dataset back into memory."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise DatasetError(f"no manifest.json under {root}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("version") != 1:
        raise DatasetError(f"unsupported manifest version {manifest.get('version')!r}")
    samples = []
    scenes = {}
    for entry in manifest["scenes"]:
        scene_id = entry["id"]
        scenes[scene_id] = SdfScene.load(root / entry["scene"])
        sample_set = load_samples(root / entry["samples"])
        for view in entry["views"]:
            samples.append(
                TrainSample(
                    image=load_png(root / view["image"]),
                    pose=CameraPose.load(root / view["camera"]),
                    samples=sample_set,
                    scene_id=scene_id,
                    view_id=int(view["id"]),
                )
            )
    return Dataset(root=root, manifest=manifest, samples=samples, scenes=scenes)
