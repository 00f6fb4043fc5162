import numpy as np
import pytest

from depthbench import (
    AffineAlignment,
    CameraIntrinsics,
    DepthRaster,
    EvalConfig,
    PointCloud,
    backproject,
    f_edges,
    fscore,
    oracle_nn,
)
from depthbench.alignment import apply_alignment
from depthbench.edge_metrics import EdgeMask, EdgeSource


def cloud(points):
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    return PointCloud(pts, np.zeros((len(pts), 2), dtype=int))


def random_cloud(rng, n, span=1.0):
    return PointCloud(rng.uniform(-span, span, (n, 3)),
                      rng.integers(0, 100, (n, 2)))


class TestBackproject:
    def test_principal_point_ray(self):
        K = CameraIntrinsics(fx=10, fy=10, cx=4.5, cy=3.5)
        depth = np.zeros((8, 8))
        depth[3, 4] = 5.0
        pc = backproject(DepthRaster(depth, depth > 0), K)
        assert len(pc) == 1
        assert pc.points[0].tolist() == [0.0, 0.0, 5.0]
        assert pc.source_pixel[0].tolist() == [4, 3]

    def test_unit_camera_single_pixel(self):
        K = CameraIntrinsics(fx=1, fy=1, cx=0.5, cy=0.5)
        pc = backproject(DepthRaster(np.array([[2.0]])), K)
        assert pc.points[0].tolist() == [0.0, 0.0, 2.0]

    def test_linear_in_depth(self, rng):
        K = CameraIntrinsics(fx=8, fy=8, cx=3, cy=2)
        d = rng.uniform(1, 10, (4, 6))
        a = backproject(DepthRaster(d), K)
        b = backproject(DepthRaster(2 * d), K)
        assert np.allclose(b.points, 2 * a.points)

    def test_point_count_matches_mask(self, rng):
        K = CameraIntrinsics(fx=8, fy=8, cx=3, cy=2)
        d = rng.uniform(1, 10, (5, 6))
        valid = rng.random((5, 6)) < 0.6
        restrict = rng.random((5, 6)) < 0.5
        pc = backproject(DepthRaster(np.where(valid, d, 0), valid), K, restrict)
        assert len(pc) == int((valid & restrict).sum())

    def test_restrict_shape_checked(self):
        K = CameraIntrinsics(fx=1, fy=1, cx=0.5, cy=0.5)
        with pytest.raises(ValueError):
            backproject(DepthRaster(np.ones((2, 2))), K, np.ones((3, 3), bool))


class TestFscore:
    def test_identical_clouds(self, rng):
        c = random_cloud(rng, 40)
        m = fscore(c, c, 0.1)
        assert (m.precision, m.recall, m.f_score) == (1.0, 1.0, 1.0)

    def test_half_matched_example(self):
        pred = cloud([[0, 0, 0], [10, 0, 0]])
        gt = cloud([[0, 0, 0], [20, 0, 0]])
        m = fscore(pred, gt, 0.1)
        assert (m.precision, m.recall, m.f_score) == (0.5, 0.5, 0.5)

    def test_swap_exchanges_precision_recall(self, rng):
        a, b = random_cloud(rng, 30), random_cloud(rng, 45)
        m1 = fscore(a, b, 0.3)
        m2 = fscore(b, a, 0.3)
        assert (m1.precision, m1.recall) == (m2.recall, m2.precision)
        assert m1.f_score == m2.f_score

    def test_empty_conventions(self, rng):
        empty = cloud(np.zeros((0, 3)))
        full = random_cloud(rng, 10)
        m = fscore(empty, full, 0.1)
        assert (m.precision, m.recall, m.f_score) == (0.0, 0.0, 0.0)
        m = fscore(full, empty, 0.1)
        assert (m.precision, m.recall, m.f_score) == (0.0, 0.0, 0.0)
        m = fscore(empty, empty, 0.1)
        assert m.f_score == 0.0

    def test_grid_equals_bruteforce_oracle(self, rng):
        for _ in range(150):
            n1 = int(rng.integers(0, 60))
            n2 = int(rng.integers(0, 60))
            a = random_cloud(rng, n1, span=float(rng.uniform(0.2, 3)))
            b = random_cloud(rng, n2, span=float(rng.uniform(0.2, 3)))
            tau = float(rng.uniform(0.02, 1.0))
            got = fscore(a, b, tau)
            ref = oracle_nn(a, b, tau)
            assert (got.precision, got.recall, got.f_score) == \
                   (ref.precision, ref.recall, ref.f_score)

    def test_monotone_in_tau(self, rng):
        for _ in range(25):
            a, b = random_cloud(rng, 50), random_cloud(rng, 50)
            taus = np.sort(rng.uniform(0.01, 1.5, 3))
            ms = [fscore(a, b, float(t)) for t in taus]
            for lo, hi in zip(ms, ms[1:]):
                assert lo.precision <= hi.precision
                assert lo.recall <= hi.recall
                assert lo.f_score <= hi.f_score

    def test_rejects_bad_tau(self, rng):
        c = random_cloud(rng, 5)
        with pytest.raises(ValueError):
            fscore(c, c, 0.0)


class TestFEdges:
    def setup_method(self):
        self.cfg = EvalConfig()
        self.K = CameraIntrinsics(fx=25.6, fy=25.6, cx=16, cy=12)

    def two_plane_scene(self):
        gt = np.full((24, 32), 2.0)
        gt[:, 16:] = 8.0
        edges = np.zeros((24, 32), dtype=bool)
        edges[:, 15:18] = True  # hand-built 3 px band at the step
        return DepthRaster(gt), EdgeMask(edges, EdgeSource.GROUND_TRUTH)

    def aligned(self, raster):
        return apply_alignment(raster, AffineAlignment.identity(), self.cfg)

    def test_perfect_prediction_scores_one(self):
        gt, edges = self.two_plane_scene()
        m = f_edges(self.aligned(gt), gt, edges, self.K, tau=0.1)
        assert m.f_score == 1.0

    def test_empty_edges_is_missing(self):
        gt, _ = self.two_plane_scene()
        empty = EdgeMask(np.zeros(gt.shape, dtype=bool), EdgeSource.GROUND_TRUTH)
        assert f_edges(self.aligned(gt), gt, empty, self.K, tau=0.1) is None

    def test_displaced_edge_matches_bruteforce(self):
        gt, edges = self.two_plane_scene()
        shifted = np.array(gt.values)
        shifted[:, 15:18] += 0.2  # displace the band by 2*tau in depth
        pred = self.aligned(DepthRaster(shifted))
        got = f_edges(pred, gt, edges, self.K, tau=0.1)
        ref = oracle_nn(backproject(pred.depth, self.K, edges.edges),
                        backproject(gt, self.K, edges.edges), 0.1)
        assert (got.precision, got.recall, got.f_score) == \
               (ref.precision, ref.recall, ref.f_score)
        assert got.f_score < 1.0
