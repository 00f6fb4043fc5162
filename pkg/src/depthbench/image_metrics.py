"""Pixel-wise depth metrics over the jointly valid mask."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import AlignedDepth
from .core import DepthRaster, EvalConfig
from .errors import EmptyMask


@dataclass(frozen=True)
class ImageMetrics:
    mae: float        # meters
    rmse: float       # meters
    absrel: float     # unitless; error normalized by ground truth
    delta1: float     # fraction with max-ratio < base
    delta2: float     # ... < base^2
    delta3: float     # ... < base^3
    pixel_count: int


def image_metrics(aligned: AlignedDepth, gt: DepthRaster, cfg: EvalConfig) -> ImageMetrics:
    """MAE, RMSE, AbsRel, and the ratio-threshold triplet.

    delta_n is the fraction of pixels with ``max(pred/gt, gt/pred) <
    delta_base**n`` (strict inequality; ties at the threshold are
    measure-zero for real data).
    """
    pred = aligned.depth
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: prediction {pred.shape} vs GT {gt.shape}")
    mask = pred.valid & gt.valid
    n = int(mask.sum())
    if n == 0:
        raise EmptyMask("no jointly valid pixel")
    d_hat = pred.values[mask].astype(np.float64)
    d = gt.values[mask].astype(np.float64)
    err = d_hat - d
    mae = float(np.abs(err).mean())
    rmse = float(np.sqrt((err * err).mean()))
    absrel = float((np.abs(err) / d).mean())
    ratio = np.maximum(d_hat / d, d / d_hat)
    base = cfg.delta_base
    deltas = [float((ratio < base ** k).mean()) for k in (1, 2, 3)]
    return ImageMetrics(mae, rmse, absrel, deltas[0], deltas[1], deltas[2], n)
