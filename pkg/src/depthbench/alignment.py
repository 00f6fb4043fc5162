"""Prediction-to-depth conversion, resampling, and alignment fitting.

The evaluation accepts disparity, affine-invariant, scale-invariant, and
metric predictions.  Disparity is inverted into depth space first; all kinds
then receive the same two-parameter least-squares fit against ground truth
(scale and shift), or legacy median scaling on request.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AffineAlignment, AlignMethod, DepthRaster, EvalConfig, PredictionKind, freeze
from .errors import AllInvalid, NonPositivePrediction, TooFewPixels

# Relative variance below this marks a prediction as effectively constant.
_DEGENERATE_VAR = 1e-12


@dataclass(frozen=True)
class AlignedDepth:
    """A prediction mapped into metric depth and clamped to the evaluation range."""

    depth: DepthRaster
    alignment: AffineAlignment
    clamped_count: int


def resize_bilinear(raster: DepthRaster, target_w: int, target_h: int) -> DepthRaster:
    """Resample with half-pixel-center bilinear interpolation.

    Source coordinate for output column x is ``(x+0.5)*w_src/w_dst - 0.5``,
    clamped to the source extent (same for rows).  An output pixel is valid
    only if every source pixel with non-zero interpolation weight is valid.
    """
    if target_w < 1 or target_h < 1:
        raise ValueError("target size must be at least 1x1")
    h, w = raster.shape
    if (target_w, target_h) == (w, h):
        return raster
    u = np.clip((np.arange(target_w) + 0.5) * (w / target_w) - 0.5, 0.0, w - 1.0)
    v = np.clip((np.arange(target_h) + 0.5) * (h / target_h) - 0.5, 0.0, h - 1.0)
    u0 = np.floor(u).astype(np.intp)
    v0 = np.floor(v).astype(np.intp)
    u1 = np.minimum(u0 + 1, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    fu = u - u0  # in [0, 1)
    fv = v - v0

    vals = np.where(raster.valid, raster.values, 0.0).astype(np.float64)
    a = vals[np.ix_(v0, u0)]
    b = vals[np.ix_(v0, u1)]
    c = vals[np.ix_(v1, u0)]
    d = vals[np.ix_(v1, u1)]
    # Incremental lerp keeps constant inputs bit-exact.
    top = a + fu[None, :] * (b - a)
    bot = c + fu[None, :] * (d - c)
    out = top + fv[:, None] * (bot - top)

    ok = raster.valid
    va = ok[np.ix_(v0, u0)]
    vb = ok[np.ix_(v0, u1)]
    vc = ok[np.ix_(v1, u0)]
    vd = ok[np.ix_(v1, u1)]
    u_exact = (fu == 0.0)[None, :]
    v_exact = (fv == 0.0)[:, None]
    ok_top = va & (vb | u_exact)
    ok_bot = vc & (vd | u_exact)
    valid = ok_top & (ok_bot | v_exact)
    return DepthRaster(freeze(np.where(valid, out, 0.0)), freeze(valid))


def to_depth_space(pred: DepthRaster, kind: PredictionKind,
                   depth_min: float = 1e-3) -> DepthRaster:
    """Convert a raw prediction into depth space.

    Disparity is inverted per pixel (non-positive disparities become invalid);
    the other kinds pass through unchanged and leave scale/shift recovery to
    the alignment fit.  ``depth_min`` is only a sanity floor for the inverted
    values' finiteness, not a clamp.
    """
    if kind is not PredictionKind.DISPARITY:
        if not pred.valid.any():
            raise AllInvalid("prediction has no valid pixels")
        return pred
    p = pred.values.astype(np.float64)
    pos = pred.valid & (p > 0)
    with np.errstate(divide="ignore", over="ignore"):
        depth = np.where(pos, 1.0 / np.where(pos, p, 1.0), 0.0)
    ok = pos & np.isfinite(depth)
    if not ok.any():
        raise AllInvalid("no pixel survives disparity inversion")
    return DepthRaster(freeze(np.where(ok, depth, 0.0)), freeze(ok))


def _joint_mask(pred: DepthRaster, gt: DepthRaster, mask) -> np.ndarray:
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: prediction {pred.shape} vs GT {gt.shape}")
    joint = pred.valid & gt.valid
    if mask is not None:
        joint = joint & np.asarray(mask, dtype=bool)
    return joint


def _lse_fit(p: np.ndarray, d: np.ndarray) -> tuple[float, float, bool]:
    """Closed-form normal equations with mean-centering for conditioning."""
    mp = float(p.mean())
    md = float(d.mean())
    pc = p - mp
    var = float((pc * pc).mean())
    mean_sq = float((p * p).mean())
    if var <= 0.0 or var < _DEGENERATE_VAR * mean_sq:
        return 1.0, md - mp, True
    cov = float((pc * (d - md)).mean())
    s = cov / var
    return s, md - s * mp, False


def solve_lse_affine(pred: DepthRaster, gt: DepthRaster, mask=None,
                     robust: bool = False) -> AffineAlignment:
    """Fit (scale, shift) minimizing the masked squared error to ground truth.

    Near-constant predictions fall back to scale 1 with a fitted shift and
    are flagged degenerate.  With ``robust=True`` a single re-fit discards
    samples whose residual exceeds three standard deviations.
    """
    joint = _joint_mask(pred, gt, mask)
    p = pred.values[joint].astype(np.float64)
    d = gt.values[joint].astype(np.float64)
    if p.size < 2:
        raise TooFewPixels(f"alignment needs at least 2 pixels, got {p.size}")
    s, t, degenerate = _lse_fit(p, d)
    if robust and not degenerate:
        r = s * p + t - d
        sigma = float(r.std())
        if sigma > 0:
            keep = np.abs(r) <= 3.0 * sigma
            if 2 <= keep.sum() < p.size:
                s, t, degenerate = _lse_fit(p[keep], d[keep])
    return AffineAlignment(s, t, AlignMethod.LSE_AFFINE, degenerate)


def median_scale(pred: DepthRaster, gt: DepthRaster, mask=None) -> AffineAlignment:
    """Legacy alignment: scale by the ratio of masked medians, no shift.

    Requires strictly positive masked predictions (and positive-depth ground
    truth, which the GT validity rule already guarantees).
    """
    joint = _joint_mask(pred, gt, mask)
    p = pred.values[joint].astype(np.float64)
    d = gt.values[joint].astype(np.float64)
    if p.size < 1:
        raise TooFewPixels("median scaling needs at least 1 pixel")
    if np.any(p <= 0):
        raise NonPositivePrediction("median scaling requires positive predictions")
    s = float(np.median(d)) / float(np.median(p))
    return AffineAlignment(s, 0.0, AlignMethod.MEDIAN_SCALE)


def apply_alignment(pred: DepthRaster, alignment: AffineAlignment,
                    cfg: EvalConfig) -> AlignedDepth:
    """Map prediction values into meters and clamp to [depth_min, depth_max].

    The validity mask is unchanged; ``clamped_count`` records how many valid
    pixels hit a bound (kept, not invalidated, so pixel counts stay
    comparable across submissions).
    """
    d = alignment.scale * pred.values.astype(np.float64) + alignment.shift
    lo, hi = cfg.depth_min, cfg.depth_max
    clamped = pred.valid & ((d < lo) | (d > hi))
    out = np.where(pred.valid, np.clip(d, lo, hi), 0.0)
    return AlignedDepth(DepthRaster(freeze(out), pred.valid), alignment, int(clamped.sum()))
