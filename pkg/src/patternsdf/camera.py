"""Pinhole camera: rigid world-to-camera transform, perspective projection
to a 137x137 canvas, and per-axis pixel reset to the [0, 136] range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_FOCAL = 70.0
DEFAULT_SIZE = (137, 137)


class CameraError(ValueError):
    pass


@dataclass
class CameraPose:
    transform: np.ndarray  # 4x4 rigid world -> camera
    focal: float = DEFAULT_FOCAL
    principal: tuple = None
    image_size: tuple = DEFAULT_SIZE

    def __post_init__(self):
        self.transform = np.asarray(self.transform, dtype=np.float64)
        if self.transform.shape != (4, 4):
            raise CameraError(f"transform must be 4x4, got {self.transform.shape}")
        if self.principal is None:
            self.principal = ((self.image_size[0] - 1) / 2.0, (self.image_size[1] - 1) / 2.0)
        if self.focal <= 0:
            raise CameraError(f"focal must be positive, got {self.focal}")
        R = self.transform[:3, :3]
        if not np.allclose(R @ R.T, np.eye(3), atol=1e-9):
            raise CameraError("rotation block is not orthonormal")
        if np.linalg.det(R) < 0:
            raise CameraError("rotation block has negative determinant")
        if not (
            np.allclose(self.transform[3, :3], 0.0, atol=1e-12)
            and abs(self.transform[3, 3] - 1.0) < 1e-12
        ):
            raise CameraError("last transform row must be [0, 0, 0, 1]")

    def to_dict(self):
        return {
            "transform": [float(v) for v in self.transform.ravel()],
            "focal": float(self.focal),
            "principal": [float(self.principal[0]), float(self.principal[1])],
            "size": [int(self.image_size[0]), int(self.image_size[1])],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            transform=np.asarray(d["transform"], dtype=np.float64).reshape(4, 4),
            focal=float(d["focal"]),
            principal=tuple(d["principal"]),
            image_size=tuple(d["size"]),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def world_to_camera(pose: CameraPose, points):
    """Apply the rigid transform to one point (3,) or a batch (N, 3)."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    out = pts @ pose.transform[:3, :3].T + pose.transform[:3, 3]
    return out[0] if single else out


def reset_pixels(uv, image_size=DEFAULT_SIZE):
    """Clamp each pixel coordinate independently into [0, W-1] x [0, H-1]."""
    uv = np.asarray(uv, dtype=np.float64)
    limits = np.array([image_size[0] - 1, image_size[1] - 1], dtype=np.float64)
    return np.clip(uv, 0.0, limits)


def project(pose: CameraPose, points, clamp: bool = True):
    """Perspective-project world points to continuous pixel coordinates.

    (u, v) = (f * x_c / z_c + cx, f * y_c / z_c + cy), then per-axis reset
    into the canvas when `clamp`. Points with z_c <= 0 sit behind the image
    plane and raise, since a normalized scene viewed by a valid pose never
    produces them.
    """
    cam = world_to_camera(pose, points)
    single = cam.ndim == 1
    cam = np.atleast_2d(cam)
    z = cam[:, 2]
    if np.any(z <= 0):
        raise CameraError(
            f"{int(np.sum(z <= 0))} point(s) behind the camera (z^c <= 0); "
            "check the pose or scene normalization"
        )
    uv = pose.focal * cam[:, :2] / z[:, None] + np.asarray(pose.principal)
    if clamp:
        uv = reset_pixels(uv, pose.image_size)
    return uv[0] if single else uv


def unproject(pose: CameraPose, uv, depth):
    """Invert projection: pixel (u, v) at camera depth z_c back to world."""
    uv = np.asarray(uv, dtype=np.float64)
    single = uv.ndim == 1
    uv = np.atleast_2d(uv)
    depth = np.broadcast_to(np.asarray(depth, dtype=np.float64), uv.shape[:1])
    xy = (uv - np.asarray(pose.principal)) / pose.focal * depth[:, None]
    cam = np.column_stack([xy, depth])
    R = pose.transform[:3, :3]
    t = pose.transform[:3, 3]
    world = (cam - t) @ R
    return world[0] if single else world


def look_at(eye, target, up=(0.0, 1.0, 0.0), focal: float = DEFAULT_FOCAL,
            image_size=DEFAULT_SIZE) -> CameraPose:
    """Pose looking from `eye` toward `target` with +z into the scene."""
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    forward = target - eye
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        raise CameraError("eye and target coincide")
    forward = forward / norm
    right = np.cross(forward, up)
    rnorm = np.linalg.norm(right)
    if rnorm < 1e-12:
        raise CameraError("up vector is parallel to the view direction")
    right = right / rnorm
    true_up = np.cross(right, forward)
    # camera frame: x right, y down... keep y = -true_up so +y runs down the
    # image, matching pixel row order
    R = np.stack([right, -true_up, forward])
    t = -R @ eye
    transform = np.eye(4)
    transform[:3, :3] = R
    transform[:3, 3] = t
    return CameraPose(transform=transform, focal=focal, image_size=image_size)
