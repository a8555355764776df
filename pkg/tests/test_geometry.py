"""CSG scenes, SDF grids, and normalization."""

import json

import numpy as np
import pytest

from patternsdf.geometry import (
    Box,
    Capsule,
    Intersection,
    SceneError,
    SdfScene,
    Sphere,
    Subtraction,
    Union,
    eval_sdf,
    grid_points,
    load_grid,
    normalize_scene,
    sample_grid,
    save_grid,
)


def brute_surface_distance(node, point, n=200000, seed=0):
    """Unsigned point-to-surface distance by dense rejection sampling.

    Oracle for combined SDFs: scatter points, keep near-surface ones by the
    node's own field only to localize, then refine via the analytic fields
    of the leaf primitives along the segment. For the scenes used here the
    combined field is exact, so a simpler check suffices: march from `point`
    along the negative gradient and verify arrival at a zero crossing.
    """
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.5, 1.5, size=(n, 3))
    vals = np.abs(node.sdf(pts))
    near = pts[vals < 0.01]
    if len(near) == 0:
        return None
    return np.linalg.norm(near - point, axis=1).min()


class TestPrimitives:
    def test_sphere_surface_point(self):
        s = SdfScene(Sphere([0, 0, 0], 0.5))
        assert eval_sdf(s, [0.5, 0, 0]) == pytest.approx(0.0, abs=1e-15)

    def test_sphere_outside(self):
        s = SdfScene(Sphere([0, 0, 0], 0.5))
        assert eval_sdf(s, [1, 0, 0]) == pytest.approx(0.5)

    def test_sphere_inside_negative(self):
        s = SdfScene(Sphere([0, 0, 0], 0.5))
        assert eval_sdf(s, [0, 0, 0]) == pytest.approx(-0.5)

    def test_box_faces_and_corners(self):
        s = SdfScene(Box([0, 0, 0], [0.2, 0.3, 0.4]))
        assert eval_sdf(s, [0.5, 0, 0]) == pytest.approx(0.3)
        assert eval_sdf(s, [0, 0, 0]) == pytest.approx(-0.2)
        # outside a corner: distance to the corner point
        p = np.array([0.3, 0.4, 0.5])
        corner = np.array([0.2, 0.3, 0.4])
        assert eval_sdf(s, p) == pytest.approx(np.linalg.norm(p - corner))

    def test_capsule_axis_and_caps(self):
        s = SdfScene(Capsule([-0.3, 0, 0], [0.3, 0, 0], 0.1))
        assert eval_sdf(s, [0, 0, 0.3]) == pytest.approx(0.2)
        assert eval_sdf(s, [0.5, 0, 0]) == pytest.approx(0.1)
        assert eval_sdf(s, [0, 0, 0]) == pytest.approx(-0.1)

    def test_invalid_primitives_raise(self):
        with pytest.raises(SceneError):
            Sphere([0, 0, 0], 0.0)
        with pytest.raises(SceneError):
            Box([0, 0, 0], [0.1, -0.1, 0.1])
        with pytest.raises(SceneError):
            Capsule([0, 0, 0], [1, 0, 0], -1.0)


class TestCombinators:
    def test_union_worked_example(self):
        s = SdfScene(Union(Sphere([0, 0, 0], 0.5), Box([0, 0, 0], [0.2, 0.2, 0.2])))
        assert eval_sdf(s, [0, 0, 0.9]) == pytest.approx(0.4, abs=1e-12)
        # brute-force surface-sampling oracle agrees outside blends
        brute = brute_surface_distance(s.root, np.array([0, 0, 0.9]))
        assert brute == pytest.approx(0.4, abs=0.01)

    def test_union_is_min(self):
        a, b = Sphere([-0.4, 0, 0], 0.2), Sphere([0.4, 0, 0], 0.3)
        u = Union(a, b)
        pts = np.random.default_rng(1).uniform(-1, 1, size=(64, 3))
        np.testing.assert_allclose(u.sdf(pts), np.minimum(a.sdf(pts), b.sdf(pts)))

    def test_intersection_is_max(self):
        a, b = Sphere([0, 0, 0], 0.5), Box([0.2, 0, 0], [0.3, 0.3, 0.3])
        i = Intersection(a, b)
        pts = np.random.default_rng(2).uniform(-1, 1, size=(64, 3))
        np.testing.assert_allclose(i.sdf(pts), np.maximum(a.sdf(pts), b.sdf(pts)))

    def test_subtraction(self):
        outer, inner = Sphere([0, 0, 0], 0.5), Sphere([0, 0, 0], 0.3)
        d = Subtraction(outer, inner)
        # center of the removed core is now outside by 0.3 (bound, exact here)
        assert d.sdf(np.array([[0.0, 0, 0]]))[0] == pytest.approx(0.3)
        assert d.sdf(np.array([[0.4, 0, 0]]))[0] < 0

    def test_combinator_arity(self):
        with pytest.raises(SceneError):
            Union(Sphere([0, 0, 0], 0.5))


class TestLipschitz:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_one_lipschitz(self, seed):
        scene = SdfScene(
            Union(
                Sphere([0.2, -0.1, 0], 0.35),
                Box([-0.4, 0.3, 0.1], [0.25, 0.2, 0.3]),
                Capsule([-0.5, -0.5, -0.2], [0.5, 0.4, 0.3], 0.15),
            )
        )
        rng = np.random.default_rng(seed)
        p = rng.uniform(-1.2, 1.2, size=(2000, 3))
        q = rng.uniform(-1.2, 1.2, size=(2000, 3))
        lhs = np.abs(scene.sdf(p) - scene.sdf(q))
        rhs = np.linalg.norm(p - q, axis=1)
        assert np.all(lhs <= rhs + 1e-12)


class TestNormalize:
    def test_offcenter_sphere(self):
        s = normalize_scene(SdfScene(Sphere([1, 1, 1], 0.5)))
        np.testing.assert_allclose(s.root.center, [0, 0, 0], atol=1e-15)
        assert s.root.radius == pytest.approx(0.9)

    def test_already_normalized_unchanged(self):
        s = SdfScene(Sphere([0, 0, 0], 0.9))
        t = normalize_scene(s)
        np.testing.assert_allclose(t.root.center, s.root.center, atol=1e-15)
        assert t.root.radius == pytest.approx(0.9)

    def test_tall_box(self):
        s = normalize_scene(SdfScene(Box([0, 0, 0.5], [0.1, 0.1, 0.5])))
        np.testing.assert_allclose(s.root.center, [0, 0, 0], atol=1e-12)
        assert s.root.half_extents.max() == pytest.approx(0.9)

    def test_idempotent(self):
        s = SdfScene(Union(Sphere([0.3, 0.1, -0.2], 0.4), Box([0, 0.5, 0], [0.2, 0.1, 0.3])))
        once = normalize_scene(s)
        twice = normalize_scene(once)
        lo1, hi1 = once.bounds()
        lo2, hi2 = twice.bounds()
        np.testing.assert_allclose(lo1, lo2, atol=1e-12)
        np.testing.assert_allclose(hi1, hi2, atol=1e-12)

    def test_sdf_rescaled_consistently(self):
        s = SdfScene(Sphere([1, 1, 1], 0.5))
        t = normalize_scene(s)
        # scale factor 0.9/0.5: sdf at origin should be -0.9
        assert t.sdf([0, 0, 0]) == pytest.approx(-0.9)

    def test_degenerate_raises(self):
        class Point(Sphere):
            def bounds(self):
                return self.center, self.center

        with pytest.raises(SceneError):
            normalize_scene(SdfScene(Point([0, 0, 0], 1.0)))


class TestSceneIO:
    def test_round_trip(self, tmp_path):
        s = SdfScene(
            Subtraction(
                Union(Sphere([0.1, 0.2, 0.3], 0.4), Box([0, 0, 0], [0.3, 0.2, 0.1])),
                Capsule([0, 0, -0.5], [0, 0, 0.5], 0.1),
            )
        )
        path = tmp_path / "scene.json"
        s.save(path)
        t = SdfScene.load(path)
        pts = np.random.default_rng(3).uniform(-1, 1, size=(256, 3))
        np.testing.assert_array_equal(s.sdf(pts), t.sdf(pts))

    def test_rejects_unknown_node(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"version": 1, "root": {"type": "torus"}}))
        with pytest.raises(SceneError):
            SdfScene.load(path)


class TestSampleGrid:
    def test_corner_value(self):
        g = sample_grid(SdfScene(Sphere([0, 0, 0], 0.5)), 65)
        assert g.values[0, 0, 0] == pytest.approx(np.sqrt(3) - 0.5)
        assert g.resolution == (65, 65, 65)
        assert g.spacing == pytest.approx(2 / 64)

    def test_res2_nodes_at_corners(self):
        pts, origin, spacing = grid_points(2)
        assert len(pts) == 8
        np.testing.assert_allclose(sorted(map(tuple, pts)), sorted(
            [(x, y, z) for z in (-1, 1) for y in (-1, 1) for x in (-1, 1)]
        ))
        assert spacing == pytest.approx(2.0)

    def test_x_fastest_order(self):
        pts, _, _ = grid_points(3)
        # first three points walk along x
        np.testing.assert_allclose(pts[0], [-1, -1, -1])
        np.testing.assert_allclose(pts[1], [0, -1, -1])
        np.testing.assert_allclose(pts[2], [1, -1, -1])
        np.testing.assert_allclose(pts[3], [-1, 0, -1])

    def test_sign_changes_along_axis_rays(self):
        g = sample_grid(SdfScene(Sphere([0, 0, 0], 0.5)), 65)
        mid = 32  # node at the origin
        for axis_vals in (g.values[:, mid, mid], g.values[mid, :, mid], g.values[mid, mid, :]):
            inside = axis_vals < 0
            flips = int(np.sum(np.diff(inside.astype(int)) != 0))
            assert flips == 2

    def test_grid_value_matches_eval(self):
        scene = SdfScene(Box([0.1, -0.1, 0.2], [0.3, 0.25, 0.2]))
        g = sample_grid(scene, 9)
        coords = g.coordinates().reshape(-1, 3)
        np.testing.assert_allclose(
            g.values.ravel(), scene.sdf(coords).reshape(9, 9, 9).ravel(), atol=1e-14
        )


class TestGridIO:
    def test_round_trip(self, tmp_path):
        g = sample_grid(SdfScene(Sphere([0, 0, 0], 0.5)), 17)
        path = tmp_path / "field.sdf"
        save_grid(g, path)
        h = load_grid(path)
        assert h.resolution == g.resolution
        assert h.spacing == pytest.approx(g.spacing)
        np.testing.assert_array_equal(h.values, np.asarray(g.values, dtype="<f4"))

    def test_blob_is_x_fastest_f4(self, tmp_path):
        g = sample_grid(SdfScene(Sphere([0, 0, 0], 0.5)), 5)
        path = tmp_path / "field.sdf"
        save_grid(g, path)
        blob = np.frombuffer(path.read_bytes(), dtype="<f4")
        assert blob[0] == np.float32(g.values[0, 0, 0])
        assert blob[1] == np.float32(g.values[1, 0, 0])
        assert blob[5] == np.float32(g.values[0, 1, 0])
        meta = json.loads((tmp_path / "field.sdf.json").read_text())
        assert meta["dtype"] == "<f4"
        assert meta["resolution"] == [5, 5, 5]
