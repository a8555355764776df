"""Sphere-traced shaded renders of SDF scenes.

Rays march by the full SDF value (exact fields permit safety factor 1) and
register a hit when |sdf| < eps. Shading is single-light Lambertian from a
directional light held fixed in the camera frame, so a scene and a camera
rotated together produce the same image. Background is constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image as PilImage

from .camera import CameraPose

TRACE_EPS = 1e-3
TRACE_MAX_STEPS = 128
# direction toward the light, expressed in camera coordinates
LIGHT_CAMERA = np.array([0.35, -0.45, -0.82])
LIGHT_CAMERA = LIGHT_CAMERA / np.linalg.norm(LIGHT_CAMERA)
BACKGROUND = 1.0


class RenderError(ValueError):
    pass


@dataclass
class Image:
    values: np.ndarray  # (H, W, 3) in [0, 1]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3 or self.values.shape[2] != 3:
            raise RenderError(f"image must be (H, W, 3), got {self.values.shape}")

    @property
    def size(self):
        return self.values.shape[1], self.values.shape[0]


def sphere_trace(scene, origins, directions, max_steps: int = TRACE_MAX_STEPS,
                 eps: float = TRACE_EPS, t_max: float = None):
    """March rays through an SDF until |sdf| < eps or escape.

    origins, directions: (N, 3) with unit directions (single rays accepted).
    Returns (hit: (N,) bool, points: (N, 3) hit positions, valid only where
    hit). Rays stop as a miss once t exceeds t_max.
    """
    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    n = len(origins)
    if t_max is None:
        # conservative escape distance for scenes inside the unit cube
        t_max = float(np.linalg.norm(origins, axis=1).max() + 2.0 * np.sqrt(3.0))

    t = np.zeros(n)
    hit = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    for _ in range(max_steps):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        pts = origins[idx] + t[idx, None] * directions[idx]
        d = scene.sdf(pts)
        close = np.abs(d) < eps
        hit[idx[close]] = True
        active[idx[close]] = False
        step = idx[~close]
        t[step] += d[~close]
        escaped = t[step] > t_max
        active[step[escaped]] = False
    points = origins + t[:, None] * directions
    return hit, points


def _normals(scene, points, h: float = 1e-5):
    """Central-difference SDF gradients, normalized."""
    grads = np.empty_like(points)
    for axis in range(3):
        lo = points.copy()
        hi = points.copy()
        lo[:, axis] -= h
        hi[:, axis] += h
        grads[:, axis] = (scene.sdf(hi) - scene.sdf(lo)) / (2 * h)
    norms = np.linalg.norm(grads, axis=1, keepdims=True)
    norms[norms < 1e-12] = 1.0
    return grads / norms


def camera_rays(pose: CameraPose):
    """World-space origin and per-pixel unit directions, shape (H, W, 3)."""
    w, h = pose.image_size
    R = pose.transform[:3, :3]
    t = pose.transform[:3, 3]
    eye = -R.T @ t
    u = np.arange(w, dtype=np.float64)
    v = np.arange(h, dtype=np.float64)
    uu, vv = np.meshgrid(u, v)
    cam_dirs = np.stack(
        [
            (uu - pose.principal[0]) / pose.focal,
            (vv - pose.principal[1]) / pose.focal,
            np.ones_like(uu),
        ],
        axis=-1,
    )
    cam_dirs /= np.linalg.norm(cam_dirs, axis=-1, keepdims=True)
    world_dirs = cam_dirs @ R
    return eye, world_dirs


def render(scene, pose: CameraPose, eps: float = TRACE_EPS,
           max_steps: int = TRACE_MAX_STEPS, background: float = BACKGROUND) -> Image:
    """Shaded render of a normalized scene from the given pose."""
    w, h = pose.image_size
    eye, dirs = camera_rays(pose)
    flat_dirs = dirs.reshape(-1, 3)
    origins = np.broadcast_to(eye, flat_dirs.shape)
    hit, points = sphere_trace(scene, origins, flat_dirs, max_steps=max_steps, eps=eps)

    shade = np.full(len(flat_dirs), background)
    if hit.any():
        normals = _normals(scene, points[hit])
        light_world = pose.transform[:3, :3].T @ LIGHT_CAMERA
        shade[hit] = np.clip(normals @ light_world, 0.0, 1.0)
    values = shade.reshape(h, w)[:, :, None].repeat(3, axis=2)
    return Image(values=np.clip(values, 0.0, 1.0))


def foreground_mask(scene, pose: CameraPose, eps: float = TRACE_EPS,
                    max_steps: int = TRACE_MAX_STEPS) -> np.ndarray:
    """Boolean (H, W) mask of pixels whose ray hits the surface."""
    w, h = pose.image_size
    eye, dirs = camera_rays(pose)
    flat_dirs = dirs.reshape(-1, 3)
    origins = np.broadcast_to(eye, flat_dirs.shape)
    hit, _ = sphere_trace(scene, origins, flat_dirs, max_steps=max_steps, eps=eps)
    return hit.reshape(h, w)


def save_png(image: Image, path) -> None:
    data = np.clip(np.round(image.values * 255.0), 0, 255).astype(np.uint8)
    PilImage.fromarray(data, mode="RGB").save(path, format="PNG")


def load_png(path) -> Image:
    with PilImage.open(path) as im:
        data = np.asarray(im.convert("RGB"), dtype=np.float64)
    return Image(values=data / 255.0)
