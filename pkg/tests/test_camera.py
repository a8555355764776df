"""Pinhole camera transforms, projection, reset, and pose construction."""

import numpy as np
import pytest

from patternsdf.camera import (
    CameraError,
    CameraPose,
    look_at,
    project,
    reset_pixels,
    unproject,
    world_to_camera,
)


def identity_pose(**kw):
    return CameraPose(transform=np.eye(4), **kw)


def translate_pose(t, **kw):
    m = np.eye(4)
    m[:3, 3] = t
    return CameraPose(transform=m, **kw)


class TestWorldToCamera:
    def test_identity(self):
        p = world_to_camera(identity_pose(), [0.2, 0.4, 2.0])
        np.testing.assert_allclose(p, [0.2, 0.4, 2.0])

    def test_translation(self):
        p = world_to_camera(translate_pose([0, 0, 3]), [0, 0, 0])
        np.testing.assert_allclose(p, [0, 0, 3])

    def test_rotation_then_translation_matches_explicit_multiply(self):
        # 90 degrees about y, then translate z by +2
        c, s = np.cos(np.pi / 2), np.sin(np.pi / 2)
        rot = np.array([[c, 0, s, 0], [0, 1, 0, 0], [-s, 0, c, 0], [0, 0, 0, 1]])
        tr = np.eye(4)
        tr[2, 3] = 2.0
        m = tr @ rot
        pose = CameraPose(transform=m)
        for p in ([1, 0, 0], [0.3, -0.2, 0.5], [0, 0, 0]):
            expected = (m @ np.append(p, 1.0))[:3]
            np.testing.assert_allclose(world_to_camera(pose, p), expected, atol=1e-12)

    def test_hand_composed_matrix_chain(self):
        rng = np.random.default_rng(9)
        m = np.eye(4)
        for _ in range(3):
            axis = rng.integers(3)
            ang = rng.uniform(-np.pi, np.pi)
            c, s = np.cos(ang), np.sin(ang)
            r = np.eye(4)
            i, j = [(1, 2), (0, 2), (0, 1)][axis]
            r[i, i] = c
            r[j, j] = c
            r[i, j] = -s if axis != 1 else s
            r[j, i] = s if axis != 1 else -s
            t = np.eye(4)
            t[:3, 3] = rng.uniform(-1, 1, 3)
            m = t @ r @ m
        pose = CameraPose(transform=m)
        pts = rng.uniform(-1, 1, (32, 3))
        expected = pts @ m[:3, :3].T + m[:3, 3]
        np.testing.assert_allclose(world_to_camera(pose, pts), expected, atol=1e-9)

    def test_preserves_distances(self):
        pose = look_at([1.2, -0.8, -1.5], [0, 0, 0])
        rng = np.random.default_rng(4)
        p = rng.uniform(-1, 1, (128, 3))
        q = rng.uniform(-1, 1, (128, 3))
        d_world = np.linalg.norm(p - q, axis=1)
        d_cam = np.linalg.norm(world_to_camera(pose, p) - world_to_camera(pose, q), axis=1)
        np.testing.assert_allclose(d_cam, d_world, atol=1e-9)

    def test_rejects_non_orthonormal(self):
        m = np.eye(4)
        m[0, 0] = 2.0
        with pytest.raises(CameraError):
            CameraPose(transform=m)


class TestProject:
    def test_worked_example(self):
        pose = translate_pose([0, 0, 0])
        uv = project(pose, [0.2, 0.4, 2.0])
        np.testing.assert_allclose(uv, [75.0, 82.0], atol=1e-12)

    def test_optical_axis_hits_principal_point(self):
        uv = project(identity_pose(), [0, 0, 1.7])
        np.testing.assert_allclose(uv, [68.0, 68.0], atol=1e-12)

    def test_reset_to_bounds(self):
        np.testing.assert_allclose(reset_pixels([150.3, -5.0]), [136.0, 0.0])
        np.testing.assert_allclose(reset_pixels([-3.0, 200.0]), [0.0, 136.0])

    def test_reset_exact_endpoints(self):
        out = reset_pixels(np.array([[1e9, -1e9], [136.0, 0.0]]))
        assert out[0, 0] == 136.0 and out[0, 1] == 0.0
        np.testing.assert_array_equal(out[1], [136.0, 0.0])

    def test_reset_idempotent_and_identity_in_bounds(self):
        rng = np.random.default_rng(0)
        uv = rng.uniform(0, 136, (64, 2))
        once = reset_pixels(uv)
        np.testing.assert_array_equal(once, uv)
        np.testing.assert_array_equal(reset_pixels(once), once)

    def test_clamped_projection_stays_in_canvas(self):
        pose = look_at([0, 0, -2.2], [0, 0, 0])
        rng = np.random.default_rng(5)
        pts = rng.uniform(-0.9, 0.9, (256, 3))
        uv = project(pose, pts)
        assert uv.min() >= 0.0 and uv.max() <= 136.0

    def test_behind_camera_raises(self):
        with pytest.raises(CameraError):
            project(identity_pose(), [0.0, 0.0, -1.0])
        with pytest.raises(CameraError):
            project(identity_pose(), [0.0, 0.0, 0.0])

    def test_round_trip_unproject(self):
        pose = look_at([1.5, 1.0, -1.8], [0, 0, 0])
        rng = np.random.default_rng(6)
        uv = rng.uniform(10, 126, (64, 2))
        depth = rng.uniform(0.5, 4.0, 64)
        world = unproject(pose, uv, depth)
        back = project(pose, world, clamp=False)
        np.testing.assert_allclose(back, uv, atol=1e-6)


class TestLookAt:
    def test_basic_geometry(self):
        pose = look_at([0, 0, -2], [0, 0, 0])
        np.testing.assert_allclose(world_to_camera(pose, [0, 0, 0]), [0, 0, 2], atol=1e-12)

    def test_eye_equals_target_raises(self):
        with pytest.raises(CameraError):
            look_at([1, 1, 1], [1, 1, 1])

    def test_up_parallel_to_view_raises(self):
        with pytest.raises(CameraError):
            look_at([0, 0, -2], [0, 0, 0], up=[0, 0, 1])

    @pytest.mark.parametrize("seed", range(5))
    def test_random_poses_orthonormal(self, seed):
        rng = np.random.default_rng(seed)
        eye = rng.uniform(-3, 3, 3)
        target = rng.uniform(-0.5, 0.5, 3)
        if np.linalg.norm(eye - target) < 1e-3:
            eye = eye + 1.0
        pose = look_at(eye, target)
        R = pose.transform[:3, :3]
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-9)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-9)

    def test_target_projects_to_center(self):
        pose = look_at([2.0, -1.0, 1.5], [0.1, 0.2, -0.1])
        uv = project(pose, [0.1, 0.2, -0.1])
        np.testing.assert_allclose(uv, [68, 68], atol=1e-9)


class TestCameraIO:
    def test_round_trip(self, tmp_path):
        pose = look_at([0.5, 1.0, -2.0], [0, 0, 0], focal=70.0)
        path = tmp_path / "cam.json"
        pose.save(path)
        back = CameraPose.load(path)
        np.testing.assert_allclose(back.transform, pose.transform, atol=1e-15)
        assert back.focal == pose.focal
        assert tuple(back.principal) == tuple(pose.principal)
        assert tuple(back.image_size) == tuple(pose.image_size)

    def test_default_intrinsics(self):
        pose = identity_pose()
        assert pose.focal == 70.0
        assert tuple(pose.principal) == (68.0, 68.0)
        assert tuple(pose.image_size) == (137, 137)
