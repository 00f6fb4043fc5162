import numpy as np
import pytest

from depthbench import (
    AlignMethod,
    DepthRaster,
    PredictionKind,
    apply_alignment,
    median_scale,
    resize_bilinear,
    solve_lse_affine,
    to_depth_space,
)
from depthbench.errors import AllInvalid, NonPositivePrediction, TooFewPixels

from conftest import random_raster


def masked_rmse(pred_vals, gt_vals, mask):
    diff = pred_vals[mask] - gt_vals[mask]
    return np.sqrt((diff ** 2).mean())


class TestResizeBilinear:
    def test_identity_is_exact(self, rng):
        r = random_raster(rng, 5, 7)
        out = resize_bilinear(r, 7, 5)
        assert out is r

    def test_half_pixel_formula_1x2_to_1x4(self):
        r = DepthRaster(np.array([[1.0, 3.0]]))
        out = resize_bilinear(r, 4, 1)
        # hand evaluation of u = (x+0.5)*w_src/w_dst - 0.5 at x = 0..3
        assert out.values.tolist() == [[1.0, 1.5, 2.5, 3.0]]

    @pytest.mark.parametrize("tw,th", [(1, 1), (3, 5), (16, 2), (9, 9)])
    def test_constant_stays_constant(self, tw, th):
        r = DepthRaster(np.full((4, 6), 2.75))
        out = resize_bilinear(r, tw, th)
        assert (out.values == 2.75).all()
        assert out.valid.all()

    def test_invalid_source_poisons_only_contributors(self):
        vals = np.array([[1.0, 2.0, 3.0, 4.0]])
        valid = np.array([[True, True, False, True]])
        out = resize_bilinear(DepthRaster(vals, valid), 8, 1)
        # outputs drawing from index 2 are invalid, pure 0/1 or 3 samples valid
        assert out.valid[0, 0] and out.valid[0, 1]
        assert not out.valid[0, 4]
        assert out.valid[0, 7]

    def test_downsampling_works(self, rng):
        r = random_raster(rng, 10, 14)
        out = resize_bilinear(r, 7, 5)
        assert out.shape == (5, 7)
        assert out.valid.all()

    def test_rejects_degenerate_target(self, rng):
        with pytest.raises(ValueError):
            resize_bilinear(random_raster(rng, 3, 3), 0, 4)


class TestToDepthSpace:
    def test_disparity_reciprocal(self):
        r = DepthRaster(np.array([[0.5, 2.0]]))
        out = to_depth_space(r, PredictionKind.DISPARITY)
        assert out.values.tolist() == [[2.0, 0.5]]

    def test_zero_disparity_invalid(self):
        r = DepthRaster(np.array([[0.0, 1.0]]))
        out = to_depth_space(r, PredictionKind.DISPARITY)
        assert out.valid.tolist() == [[False, True]]

    def test_negative_disparity_invalid(self):
        r = DepthRaster(np.array([[-0.5, 4.0]]))
        out = to_depth_space(r, PredictionKind.DISPARITY)
        assert out.valid.tolist() == [[False, True]]

    @pytest.mark.parametrize("kind", [PredictionKind.METRIC,
                                      PredictionKind.SCALE_INVARIANT,
                                      PredictionKind.AFFINE_INVARIANT])
    def test_passthrough_is_bytewise_equal(self, rng, kind):
        r = random_raster(rng, 4, 4, lo=-3, hi=3)
        out = to_depth_space(r, kind)
        assert out is r

    def test_all_invalid_raises(self):
        r = DepthRaster(np.array([[0.0, -1.0]]))
        with pytest.raises(AllInvalid):
            to_depth_space(r, PredictionKind.DISPARITY)


class TestSolveLseAffine:
    def test_exact_affine_relation(self):
        pred = DepthRaster(np.array([[1.0, 2.0, 3.0]]))
        gt = DepthRaster(np.array([[3.0, 5.0, 7.0]]))
        fit = solve_lse_affine(pred, gt)
        assert fit.scale == pytest.approx(2.0, abs=1e-12)
        assert fit.shift == pytest.approx(1.0, abs=1e-12)
        assert fit.method is AlignMethod.LSE_AFFINE
        assert not fit.degenerate

    def test_self_alignment(self, rng):
        r = random_raster(rng, 6, 6)
        fit = solve_lse_affine(r, r)
        assert fit.scale == pytest.approx(1.0, rel=1e-12)
        assert fit.shift == pytest.approx(0.0, abs=1e-9)

    def test_closed_form_beats_grid_search(self, rng):
        # brute-force oracle: residual at the closed-form solution is no
        # larger than anywhere on a dense grid around it
        for _ in range(25):
            p = rng.uniform(0.5, 10, 16)
            d = rng.uniform(0.5, 10, 16)
            pred = DepthRaster(p.reshape(4, 4))
            gt = DepthRaster(d.reshape(4, 4))
            fit = solve_lse_affine(pred, gt)
            ss = fit.scale + np.arange(-100, 101) * 1e-3
            tt = fit.shift + np.arange(-100, 101) * 1e-3
            grid = ((ss[:, None, None] * p[None, None, :]
                     + tt[None, :, None] - d[None, None, :]) ** 2).sum(axis=2)
            best = (fit.scale * p + fit.shift - d) @ (fit.scale * p + fit.shift - d)
            assert best <= grid.min() + 1e-9

    def test_normal_equation_orthogonality(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 40))
            p = rng.uniform(0.1, 20, n)
            d = rng.uniform(0.1, 20, n)
            fit = solve_lse_affine(DepthRaster(p.reshape(1, -1)), DepthRaster(d.reshape(1, -1)))
            r = fit.scale * p + fit.shift - d
            scale = np.abs(fit.scale * p) + abs(fit.shift) + np.abs(d)
            assert abs(r.sum()) <= 1e-6 * scale.sum()
            assert abs((r * p).sum()) <= 1e-6 * (scale * np.abs(p)).sum()

    def test_affine_equivariance(self, rng):
        p = random_raster(rng, 5, 5)
        d = random_raster(rng, 5, 5)
        base = solve_lse_affine(p, d)
        for _ in range(10):
            a = float(rng.uniform(0.05, 20))
            b = float(rng.uniform(-10, 10))
            warped = DepthRaster(a * p.values + b, p.valid)
            fit = solve_lse_affine(warped, d)
            assert fit.scale == pytest.approx(base.scale / a, rel=1e-9)
            assert fit.shift == pytest.approx(base.shift - base.scale * b / a, rel=1e-8, abs=1e-8)

    def test_aligned_depth_map_equivariant(self, cfg, rng):
        # re-encoding the prediction must reproduce the same aligned map
        p = random_raster(rng, 6, 6)
        d = random_raster(rng, 6, 6)
        base = apply_alignment(p, solve_lse_affine(p, d), cfg)
        for a, b in ((3.0, -1.0), (0.02, 40.0), (250.0, 7.5)):
            warped = DepthRaster(a * p.values + b, p.valid)
            out = apply_alignment(warped, solve_lse_affine(warped, d), cfg)
            diff = np.abs(out.depth.values - base.depth.values)[p.valid & d.valid]
            assert diff.max() < 1e-6

    def test_never_worse_than_unaligned(self, rng):
        for _ in range(20):
            p = random_raster(rng, 6, 6, lo=0.2, hi=30)
            d = random_raster(rng, 6, 6, lo=0.2, hi=30)
            fit = solve_lse_affine(p, d)
            mask = p.valid & d.valid
            aligned_vals = fit.scale * p.values + fit.shift
            assert (masked_rmse(aligned_vals, d.values, mask)
                    <= masked_rmse(p.values, d.values, mask) + 1e-12)

    def test_constant_prediction_degenerates(self):
        pred = DepthRaster(np.full((2, 3), 4.0))
        gt = DepthRaster(np.arange(6, dtype=float).reshape(2, 3) + 1)
        fit = solve_lse_affine(pred, gt)
        assert fit.degenerate
        assert fit.scale == 1.0
        assert fit.shift == pytest.approx(gt.values.mean() - 4.0)

    def test_too_few_pixels(self):
        pred = DepthRaster(np.array([[1.0]]))
        gt = DepthRaster(np.array([[2.0]]))
        with pytest.raises(TooFewPixels):
            solve_lse_affine(pred, gt)

    def test_robust_refit_discards_outlier(self, rng):
        p = rng.uniform(1, 10, 64)
        d = 2.0 * p + 1.0
        d[3] += 500.0  # gross outlier
        pred = DepthRaster(p.reshape(8, 8))
        gt = DepthRaster(d.reshape(8, 8))
        plain = solve_lse_affine(pred, gt)
        robust = solve_lse_affine(pred, gt, robust=True)
        assert abs(robust.scale - 2.0) < abs(plain.scale - 2.0)
        assert robust.scale == pytest.approx(2.0, rel=1e-9)


class TestMedianScale:
    def test_ratio_of_medians(self):
        pred = DepthRaster(np.array([[1.0, 2.0, 4.0]]))
        gt = DepthRaster(np.array([[2.0, 4.0, 8.0]]))
        assert median_scale(pred, gt).scale == 2.0

    def test_self_is_one(self, rng):
        r = random_raster(rng, 4, 4)
        assert median_scale(r, r).scale == 1.0

    def test_even_count_averages_middles(self):
        pred = DepthRaster(np.array([[1.0, 3.0]]))
        gt = DepthRaster(np.array([[2.0, 10.0]]))
        # medians: (1+3)/2 = 2 and (2+10)/2 = 6
        assert median_scale(pred, gt).scale == 3.0

    def test_shift_is_zero_and_method_tagged(self, rng):
        r = random_raster(rng, 3, 3)
        fit = median_scale(r, r)
        assert fit.shift == 0.0
        assert fit.method is AlignMethod.MEDIAN_SCALE

    def test_scale_equivariance(self, rng):
        p = random_raster(rng, 5, 5, lo=0.5, hi=5)
        d = random_raster(rng, 5, 5, lo=0.5, hi=5)
        base = median_scale(p, d).scale
        for k in (0.25, 2.0, 7.5):
            scaled = DepthRaster(k * p.values, p.valid)
            assert median_scale(scaled, d).scale == pytest.approx(base / k, rel=1e-12)

    def test_nonpositive_prediction_rejected(self):
        pred = DepthRaster(np.array([[1.0, -2.0]]))
        gt = DepthRaster(np.array([[2.0, 4.0]]))
        with pytest.raises(NonPositivePrediction):
            median_scale(pred, gt)

    def test_too_few(self):
        pred = DepthRaster(np.array([[1.0]]), np.array([[False]]))
        gt = DepthRaster(np.array([[1.0]]))
        with pytest.raises(TooFewPixels):
            median_scale(pred, gt)


class TestApplyAlignment:
    def test_identity_is_clamp_only(self, cfg):
        from depthbench import AffineAlignment
        r = DepthRaster(np.array([[0.0001, 5.0, 500.0]]))
        out = apply_alignment(r, AffineAlignment.identity(), cfg)
        assert out.depth.values.tolist() == [[cfg.depth_min, 5.0, cfg.depth_max]]
        assert out.clamped_count == 2

    def test_affine_arithmetic(self, cfg):
        from depthbench import AffineAlignment
        r = DepthRaster(np.array([[0.4]]))
        fit = AffineAlignment(2.0, 1.0, AlignMethod.LSE_AFFINE)
        out = apply_alignment(r, fit, cfg)
        assert out.depth.values[0, 0] == pytest.approx(1.8)
        assert out.clamped_count == 0

    def test_negative_clamps_to_floor(self, cfg):
        from depthbench import AffineAlignment
        r = DepthRaster(np.array([[2.0, 3.0]]))
        fit = AffineAlignment(1.0, -5.0, AlignMethod.LSE_AFFINE)
        out = apply_alignment(r, fit, cfg)
        assert out.depth.values.tolist() == [[cfg.depth_min, cfg.depth_min]]
        assert out.clamped_count == 2

    def test_validity_mask_unchanged(self, cfg, rng):
        from depthbench import AffineAlignment
        r = random_raster(rng, 5, 5, hole_p=0.3)
        out = apply_alignment(r, AffineAlignment.identity(), cfg)
        assert np.array_equal(out.depth.valid, r.valid)
