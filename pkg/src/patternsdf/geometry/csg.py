"""Analytic signed-distance scenes built from CSG trees.

Primitives (sphere, axis-aligned box, capsule) have exact SDFs; union,
intersection and subtraction combine them with min/max. The combined field
is an exact signed distance away from blend regions and a correct signed
bound everywhere, which is all the downstream samplers and extractors need.
Convention: negative inside, positive outside, zero on the surface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class SceneError(ValueError):
    """Raised for degenerate or malformed scene definitions."""


def _as_points(p):
    pts = np.asarray(p, dtype=np.float64)
    single = pts.ndim == 1
    return np.atleast_2d(pts), single


class Node:
    """Base CSG node. Subclasses implement sdf/bounds/remapped/to_dict."""

    def sdf(self, points):
        raise NotImplementedError

    def bounds(self):
        """Conservative axis-aligned bounds (lo, hi) of the represented solid."""
        raise NotImplementedError

    def remapped(self, shift, scale):
        """Return this node under the point map x -> (x + shift) * scale."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass
class Sphere(Node):
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.radius <= 0:
            raise SceneError(f"sphere radius must be positive, got {self.radius}")

    def sdf(self, points):
        return np.linalg.norm(points - self.center, axis=-1) - self.radius

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def remapped(self, shift, scale):
        return Sphere((self.center + shift) * scale, self.radius * scale)

    def to_dict(self):
        return {"type": "sphere", "center": self.center.tolist(), "radius": self.radius}


@dataclass
class Box(Node):
    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64)
        if np.any(self.half_extents <= 0):
            raise SceneError(f"box half-extents must be positive, got {self.half_extents}")

    def sdf(self, points):
        q = np.abs(points - self.center) - self.half_extents
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(q.max(axis=-1), 0.0)
        return outside + inside

    def bounds(self):
        return self.center - self.half_extents, self.center + self.half_extents

    def remapped(self, shift, scale):
        return Box((self.center + shift) * scale, self.half_extents * scale)

    def to_dict(self):
        return {
            "type": "box",
            "center": self.center.tolist(),
            "half_extents": self.half_extents.tolist(),
        }


@dataclass
class Capsule(Node):
    a: np.ndarray
    b: np.ndarray
    radius: float

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.radius <= 0:
            raise SceneError(f"capsule radius must be positive, got {self.radius}")

    def sdf(self, points):
        ab = self.b - self.a
        denom = float(ab @ ab)
        if denom == 0.0:
            return np.linalg.norm(points - self.a, axis=-1) - self.radius
        t = np.clip((points - self.a) @ ab / denom, 0.0, 1.0)
        closest = self.a + t[..., None] * ab
        return np.linalg.norm(points - closest, axis=-1) - self.radius

    def bounds(self):
        lo = np.minimum(self.a, self.b) - self.radius
        hi = np.maximum(self.a, self.b) + self.radius
        return lo, hi

    def remapped(self, shift, scale):
        return Capsule((self.a + shift) * scale, (self.b + shift) * scale, self.radius * scale)

    def to_dict(self):
        return {
            "type": "capsule",
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "radius": self.radius,
        }


class _Combinator(Node):
    kind = ""

    def __init__(self, *children):
        if len(children) < 2:
            raise SceneError(f"{self.kind} needs at least two children")
        self.children = list(children)

    def remapped(self, shift, scale):
        return type(self)(*[c.remapped(shift, scale) for c in self.children])

    def to_dict(self):
        return {"type": self.kind, "children": [c.to_dict() for c in self.children]}


class Union(_Combinator):
    kind = "union"

    def sdf(self, points):
        values = [c.sdf(points) for c in self.children]
        return np.minimum.reduce(values)

    def bounds(self):
        los, his = zip(*[c.bounds() for c in self.children])
        return np.minimum.reduce(los), np.maximum.reduce(his)


class Intersection(_Combinator):
    kind = "intersection"

    def sdf(self, points):
        values = [c.sdf(points) for c in self.children]
        return np.maximum.reduce(values)

    def bounds(self):
        los, his = zip(*[c.bounds() for c in self.children])
        return np.maximum.reduce(los), np.minimum.reduce(his)


class Subtraction(_Combinator):
    """First child minus the union of the rest."""

    kind = "subtraction"

    def sdf(self, points):
        value = self.children[0].sdf(points)
        for c in self.children[1:]:
            value = np.maximum(value, -c.sdf(points))
        return value

    def bounds(self):
        return self.children[0].bounds()


_NODE_TYPES = {
    "sphere": Sphere,
    "box": Box,
    "capsule": Capsule,
    "union": Union,
    "intersection": Intersection,
    "subtraction": Subtraction,
}


def node_from_dict(d) -> Node:
    kind = d.get("type")
    if kind not in _NODE_TYPES:
        raise SceneError(f"unknown node type {kind!r}")
    if kind == "sphere":
        return Sphere(d["center"], d["radius"])
    if kind == "box":
        return Box(d["center"], d["half_extents"])
    if kind == "capsule":
        return Capsule(d["a"], d["b"], d["radius"])
    return _NODE_TYPES[kind](*[node_from_dict(c) for c in d["children"]])


@dataclass
class SdfScene:
    """A CSG tree with an exact-by-construction signed distance field."""

    root: Node

    def sdf(self, points):
        pts, single = _as_points(points)
        values = self.root.sdf(pts)
        return float(values[0]) if single else values

    def bounds(self):
        return self.root.bounds()

    def to_dict(self):
        return {"version": 1, "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(node_from_dict(d["root"]))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def eval_sdf(scene: SdfScene, points):
    """Signed distance of one point (3,) or a batch (N, 3)."""
    return scene.sdf(points)


def normalize_scene(scene: SdfScene, margin: float = 0.9) -> SdfScene:
    """Recenter and rescale so the bounding box sits at the origin with
    max half-extent `margin`.

    Uniform scaling keeps all primitive SDFs exact. Raises SceneError for
    scenes with no spatial extent.
    """
    lo, hi = scene.bounds()
    if np.any(hi <= lo):
        raise SceneError("scene bounds are empty or inverted")
    center = (lo + hi) / 2.0
    half = float(np.max((hi - lo) / 2.0))
    if half < 1e-12:
        raise SceneError("scene has zero extent, cannot normalize")
    scale = margin / half
    return SdfScene(scene.root.remapped(-center, scale))
