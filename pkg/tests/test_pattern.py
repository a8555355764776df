"""Pattern initialization against literal per-point formulas."""

import numpy as np
import pytest

from patternsdf.model import PatternConfig, init_pattern


def oracle_uniform6(p, l):
    x, y, z = p
    h = l / 2.0
    return [
        (x, y, z + h),
        (x + h, y, z),
        (x, y + h, z),
        (x, y, z - h),
        (x - h, y, z),
        (x, y - h, z),
    ]


def oracle_nonuniform6(p):
    x, y, z = p
    return [
        (x, y, -z),
        (-x, y, z),
        (x, -y, z),
        (-x, -y, z),
        (x, -y, -z),
        (-x, y, -z),
    ]


def oracle_rigid3(p):
    x, y, z = p
    return [(x, y, -z), (-x, y, z), (-x, y, -z)]


class TestWorkedExamples:
    def test_uniform6(self):
        out = init_pattern(np.array([0.2, 0.3, -0.1]), PatternConfig(kind="uniform-6p", l=0.2))
        expect = np.array(
            [
                (0.2, 0.3, 0.0),
                (0.3, 0.3, -0.1),
                (0.2, 0.4, -0.1),
                (0.2, 0.3, -0.2),
                (0.1, 0.3, -0.1),
                (0.2, 0.2, -0.1),
            ]
        )
        np.testing.assert_allclose(out, expect, atol=1e-15)

    def test_nonuniform6(self):
        out = init_pattern(np.array([0.2, 0.3, -0.1]), PatternConfig(kind="non-uniform-6p"))
        expect = np.array(
            [
                (0.2, 0.3, 0.1),
                (-0.2, 0.3, -0.1),
                (0.2, -0.3, -0.1),
                (-0.2, -0.3, -0.1),
                (0.2, -0.3, 0.1),
                (-0.2, 0.3, 0.1),
            ]
        )
        np.testing.assert_array_equal(out, expect)

    def test_origin_fixed_point(self):
        for kind in ("non-uniform-6p", "non-uniform-3p", "rigid-3p"):
            out = init_pattern(np.zeros(3), PatternConfig(kind=kind))
            np.testing.assert_array_equal(out, np.zeros_like(out))


class TestRandomOracle:
    def test_uniform6_exact_1000(self):
        rng = np.random.default_rng(100)
        pts = rng.uniform(-1, 1, (1000, 3))
        cfg = PatternConfig(kind="uniform-6p", l=0.2)
        got = init_pattern(pts, cfg)
        for i, p in enumerate(pts):
            expect = np.array(oracle_uniform6(p, 0.2))
            assert np.array_equal(got[i], expect), f"mismatch at point {i}"

    def test_nonuniform6_exact_1000(self):
        rng = np.random.default_rng(101)
        pts = rng.uniform(-1, 1, (1000, 3))
        got = init_pattern(pts, PatternConfig(kind="non-uniform-6p"))
        for i, p in enumerate(pts):
            assert np.array_equal(got[i], np.array(oracle_nonuniform6(p)))

    def test_nonuniform3_is_first_three(self):
        rng = np.random.default_rng(102)
        pts = rng.uniform(-1, 1, (1000, 3))
        got3 = init_pattern(pts, PatternConfig(kind="non-uniform-3p"))
        got6 = init_pattern(pts, PatternConfig(kind="non-uniform-6p"))
        np.testing.assert_array_equal(got3, got6[:, :3])

    def test_rigid3_exact_1000(self):
        rng = np.random.default_rng(103)
        pts = rng.uniform(-1, 1, (1000, 3))
        got = init_pattern(pts, PatternConfig(kind="rigid-3p"))
        for i, p in enumerate(pts):
            assert np.array_equal(got[i], np.array(oracle_rigid3(p)))

    def test_rigid_is_p1_p2_p6_of_nonuniform(self):
        rng = np.random.default_rng(104)
        pts = rng.uniform(-1, 1, (100, 3))
        rigid = init_pattern(pts, PatternConfig(kind="rigid-3p"))
        six = init_pattern(pts, PatternConfig(kind="non-uniform-6p"))
        np.testing.assert_array_equal(rigid, six[:, [0, 1, 5]])


class TestConfig:
    def test_counts(self):
        assert PatternConfig(kind="uniform-6p").n == 6
        assert PatternConfig(kind="non-uniform-6p").n == 6
        assert PatternConfig(kind="non-uniform-3p").n == 3
        assert PatternConfig(kind="rigid-3p").n == 3

    def test_trainable_flags(self):
        assert PatternConfig(kind="non-uniform-6p").trainable
        assert not PatternConfig(kind="rigid-3p").trainable

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            PatternConfig(kind="octahedral")

    def test_rejects_bad_edge(self):
        with pytest.raises(ValueError):
            PatternConfig(kind="uniform-6p", l=0.0)
