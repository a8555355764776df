"""Metric implementations against brute-force and analytic oracles."""

import itertools

import numpy as np
import pytest

from patternsdf.geometry import Box, SdfScene, solid_voxelize
from patternsdf.metrics import (
    EMD_EXACT_LIMIT,
    MetricsError,
    MetricsReport,
    chamfer,
    compute_report,
    emd,
    format_offset_table,
    iou,
    pattern_offset_stats,
    write_offset_csv,
)
from patternsdf.model import ModelConfig, PatternConfig, PatternSdfNetwork, mini_encoder_config


def brute_chamfer(a, b):
    d2 = np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2)
    return d2.min(axis=1).mean() + d2.min(axis=0).mean()


def brute_emd(a, b):
    d = np.sqrt(np.sum((a[:, None, :] - b[None, :, :]) ** 2, axis=2))
    best = np.inf
    for perm in itertools.permutations(range(len(a))):
        best = min(best, d[np.arange(len(a)), perm].mean())
    return best


class TestChamfer:
    def test_identity(self):
        pts = np.random.default_rng(0).normal(size=(32, 3))
        assert chamfer(pts, pts) == 0.0

    def test_single_pair(self):
        assert chamfer([(0.0, 0.0, 0.0)], [(1.0, 0.0, 0.0)]) == 2.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for n, m in ((4, 4), (17, 9), (64, 64), (1, 50)):
            a = rng.normal(size=(n, 3))
            b = rng.normal(size=(m, 3))
            assert chamfer(a, b) == pytest.approx(brute_chamfer(a, b), abs=1e-12)

    def test_symmetric(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(size=(20, 3)), rng.normal(size=(30, 3))
        assert chamfer(a, b) == chamfer(b, a)

    def test_empty_raises(self):
        with pytest.raises(MetricsError):
            chamfer(np.zeros((0, 3)), np.zeros((4, 3)))

    def test_bad_shape_raises(self):
        with pytest.raises(MetricsError):
            chamfer(np.zeros((4, 2)), np.zeros((4, 3)))


class TestEmd:
    def test_identity_permuted(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(40, 3))
        b = a[rng.permutation(40)]
        assert emd(a, b, mode="exact") == pytest.approx(0.0, abs=1e-12)

    def test_single_pair(self):
        assert emd([(0.0, 0.0, 0.0)], [(1.0, 0.0, 0.0)]) == pytest.approx(1.0)

    def test_exact_matches_permutation_search(self):
        rng = np.random.default_rng(4)
        for n in (2, 4, 6):
            a = rng.normal(size=(n, 3))
            b = rng.normal(size=(n, 3))
            assert emd(a, b, mode="exact") == pytest.approx(brute_emd(a, b), abs=1e-12)

    def test_exact_symmetric(self):
        rng = np.random.default_rng(5)
        a, b = rng.normal(size=(25, 3)), rng.normal(size=(25, 3))
        assert emd(a, b, mode="exact") == pytest.approx(emd(b, a, mode="exact"), abs=1e-12)

    def test_approx_within_two_percent_at_256(self):
        rng = np.random.default_rng(6)
        for trial in range(3):
            a = rng.uniform(-1, 1, (256, 3))
            b = rng.uniform(-1, 1, (256, 3))
            exact = emd(a, b, mode="exact")
            approx = emd(a, b, mode="approx")
            assert approx >= exact - 1e-9
            assert approx <= exact * 1.02

    def test_approx_identity_clusters(self):
        # distinct clusters force a unique matching the auction must find
        rng = np.random.default_rng(7)
        centers = rng.uniform(-1, 1, (16, 3)) * 10
        a = np.repeat(centers, 4, axis=0) + rng.normal(0, 1e-3, (64, 3))
        b = a[rng.permutation(64)]
        assert emd(a, b, mode="approx") <= emd(a, b, mode="exact") * 1.02 + 1e-9

    def test_auto_threshold(self):
        rng = np.random.default_rng(8)
        small = rng.normal(size=(EMD_EXACT_LIMIT, 3))
        assert emd(small, small, mode="auto") == emd(small, small, mode="exact")
        big_a = rng.normal(size=(EMD_EXACT_LIMIT + 1, 3))
        big_b = rng.normal(size=(EMD_EXACT_LIMIT + 1, 3))
        assert emd(big_a, big_b, mode="auto") == emd(big_a, big_b, mode="approx")

    def test_size_mismatch_raises(self):
        with pytest.raises(MetricsError):
            emd(np.zeros((3, 3)), np.zeros((4, 3)))

    def test_unknown_mode_raises(self):
        with pytest.raises(MetricsError):
            emd(np.zeros((2, 3)), np.zeros((2, 3)), mode="greedy")


class TestIou:
    def test_identical_nonempty(self):
        occ = np.zeros((8, 8, 8), dtype=bool)
        occ[2:5, 2:5, 2:5] = True
        assert iou(occ, occ) == 100.0

    def test_disjoint(self):
        a = np.zeros((8, 8, 8), dtype=bool)
        b = np.zeros((8, 8, 8), dtype=bool)
        a[0, 0, 0] = True
        b[7, 7, 7] = True
        assert iou(a, b) == 0.0

    def test_empty_pair_is_identical(self):
        empty = np.zeros((4, 4, 4), dtype=bool)
        assert iou(empty, empty) == 100.0

    def test_counted_overlap(self):
        a = np.zeros((4, 4, 4), dtype=bool)
        b = np.zeros((4, 4, 4), dtype=bool)
        a[:2, :2, :2] = True  # 8 cells
        b[1:3, :2, :2] = True  # 8 cells, 4 shared
        assert iou(a, b) == pytest.approx(100.0 * 4 / 12)

    def test_accepts_occupancy_grids(self):
        cube = SdfScene(Box(center=(0, 0, 0), half_extents=(0.5, 0.5, 0.5)))
        g = solid_voxelize(cube, 16)
        assert iou(g, g) == 100.0

    def test_shape_mismatch_raises(self):
        with pytest.raises(MetricsError):
            iou(np.zeros((4, 4, 4), dtype=bool), np.zeros((5, 5, 5), dtype=bool))

    def test_nonbool_raises(self):
        with pytest.raises(MetricsError):
            iou(np.zeros((4, 4, 4)), np.zeros((4, 4, 4)))

    def test_half_offset_unit_cubes(self):
        # analytic overlap of unit cubes shifted by half an edge is 1/3
        cube_a = SdfScene(Box(center=(0.5, 0.5, 0.5), half_extents=(0.5, 0.5, 0.5)))
        cube_b = SdfScene(Box(center=(1.0, 0.5, 0.5), half_extents=(0.5, 0.5, 0.5)))
        res = 64
        ga = solid_voxelize(cube_a, res, lo=-0.25, hi=1.75)
        gb = solid_voxelize(cube_b, res, lo=-0.25, hi=1.75)
        value = iou(ga, gb)
        cell = 2.0 / res
        shell = 100.0 * ((0.5 + cell) / (1.5 - cell) - 1.0 / 3.0)
        assert abs(value - 100.0 / 3.0) <= shell


class TestReport:
    def test_scaling(self):
        a = np.array([[0.0, 0.0, 0.0]])
        b = np.array([[1.0, 0.0, 0.0]])
        occ = np.ones((4, 4, 4), dtype=bool)
        rep = compute_report(a, b, occ, occ)
        assert rep.cd == pytest.approx(2000.0)
        assert rep.emd == pytest.approx(100.0)
        assert rep.iou == 100.0
        assert rep.point_count == 1
        assert rep.voxel_res == 4

    def test_roundtrip(self, tmp_path):
        rep = MetricsReport(cd=1.5, emd=2.5, iou=88.0, point_count=2048, voxel_res=64)
        rep.save(tmp_path / "report.json")
        import json

        back = MetricsReport.from_dict(json.loads((tmp_path / "report.json").read_text()))
        assert back == rep

    def test_validation(self):
        with pytest.raises(MetricsError):
            MetricsReport(cd=-1.0, emd=0.0, iou=50.0)
        with pytest.raises(MetricsError):
            MetricsReport(cd=0.0, emd=0.0, iou=101.0)


class TestOffsetStats:
    def make_net(self, kind="non-uniform-6p"):
        return PatternSdfNetwork(
            ModelConfig(
                encoder=mini_encoder_config(image_size=(8, 8)),
                pattern=PatternConfig(kind=kind),
            )
        )

    def test_zero_at_init(self):
        net = self.make_net()
        probes = np.random.default_rng(9).uniform(-0.5, 0.5, (32, 3))
        stats = pattern_offset_stats(net, probes)
        assert stats.shape == (6,)
        np.testing.assert_array_equal(stats, 0.0)

    def test_rigid_always_zero(self):
        net = self.make_net(kind="rigid-3p")
        probes = np.random.default_rng(10).uniform(-0.5, 0.5, (32, 3))
        stats = pattern_offset_stats(net, probes)
        assert stats.shape == (3,)
        np.testing.assert_array_equal(stats, 0.0)

    def test_perturbed_within_tanh_bound(self):
        net = self.make_net()
        rng = np.random.default_rng(11)
        for name, p in net.named_parameters().items():
            if name.startswith("generator."):
                p.data = rng.normal(0, 1.0, p.data.shape)
        stats = pattern_offset_stats(net, rng.uniform(-0.5, 0.5, (32, 3)))
        assert np.all(stats > 0.0)
        assert np.all(stats < np.sqrt(3.0))

    def test_csv_and_table(self, tmp_path):
        stats = np.array([0.0, 0.125, 0.5])
        write_offset_csv(tmp_path / "stats.csv", stats)
        lines = (tmp_path / "stats.csv").read_text().strip().splitlines()
        assert lines[0] == "pattern_index,mean_offset"
        assert lines[1] == "1,0"
        assert lines[2] == "2,0.125"
        assert len(lines) == 4
        table = format_offset_table(stats)
        assert "p3" in table and "0.5" in table
