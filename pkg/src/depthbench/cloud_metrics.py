"""Point-cloud reconstruction metrics: back-projection and F-Score.

The F-Score compares the predicted and ground-truth clouds under a Euclidean
match radius tau.  Matching is decided exactly with a uniform 3D grid index
of cell edge tau: a point within tau of a query necessarily falls in one of
the 27 cells around the query's cell, so only that neighborhood is searched.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .alignment import AlignedDepth
from .core import CameraIntrinsics, DepthRaster, freeze


@dataclass(frozen=True)
class PointCloud:
    """Points in the camera frame (x right, y down, z forward), meters.

    ``source_pixel`` keeps the (x, y) pixel each point came from, in the same
    order as ``points``.
    """

    points: np.ndarray        # (N, 3) float64
    source_pixel: np.ndarray  # (N, 2) int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        src = np.asarray(self.source_pixel, dtype=np.intp).reshape(-1, 2)
        if len(pts) != len(src):
            raise ValueError("points and source_pixel must have equal length")
        for arr, name in ((pts, "points"), (src, "source_pixel")):
            if arr.flags.writeable:
                arr = arr.copy()
                arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CloudMetrics:
    precision: float
    recall: float
    f_score: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "CloudMetrics":
        if precision + recall == 0:
            f = 0.0
        else:
            f = 2.0 * precision * recall / (precision + recall)
        return cls(precision, recall, f)


def backproject(depth: DepthRaster, intrinsics: CameraIntrinsics,
                restrict=None) -> PointCloud:
    """Lift valid (optionally restricted) pixels into 3D camera coordinates.

    Pixel centers sit at (x+0.5, y+0.5), matching the resampling convention,
    so X = (x+0.5-cx) * z / fx and Y = (y+0.5-cy) * z / fy.
    """
    sel = depth.valid
    if restrict is not None:
        restrict = np.asarray(getattr(restrict, "edges", restrict), dtype=bool)
        if restrict.shape != depth.shape:
            raise ValueError("restrict mask shape must match the raster")
        sel = sel & restrict
    ys, xs = np.nonzero(sel)
    z = depth.values[ys, xs].astype(np.float64)
    x3 = (xs + 0.5 - intrinsics.cx) * z / intrinsics.fx
    y3 = (ys + 0.5 - intrinsics.cy) * z / intrinsics.fy
    return PointCloud(freeze(np.column_stack([x3, y3, z])),
                      freeze(np.column_stack([xs, ys])))


# 27 neighbor offsets, own cell first so dense matches resolve immediately.
_NEIGHBOR_OFFSETS = sorted(
    itertools.product((-1, 0, 1), repeat=3),
    key=lambda o: (abs(o[0]) + abs(o[1]) + abs(o[2]), o),
)


def _has_neighbor_within(queries: np.ndarray, refs: np.ndarray, tau: float) -> np.ndarray:
    """Per query point: does any reference point lie within tau (closed ball)?

    Exact decision via the tau-cell grid.  A same-index pairing check runs
    first; it is sound for arbitrary clouds and resolves almost every point
    when both clouds stem from the same pixel grid.
    """
    nq = len(queries)
    hit = np.zeros(nq, dtype=bool)
    if nq == 0 or len(refs) == 0:
        return hit
    tau_sq = tau * tau

    m = min(nq, len(refs))
    if m:
        d_sq = ((queries[:m] - refs[:m]) ** 2).sum(axis=1)
        hit[:m] = d_sq <= tau_sq
    todo = np.flatnonzero(~hit)
    if todo.size == 0:
        return hit

    inv = 1.0 / tau
    ref_cells = np.floor(refs * inv).astype(np.int64)
    q_cells = np.floor(queries[todo] * inv).astype(np.int64)
    lo = np.minimum(ref_cells.min(axis=0), q_cells.min(axis=0)) - 1
    extent = (np.maximum(ref_cells.max(axis=0), q_cells.max(axis=0)) + 2 - lo).astype(np.int64)
    if int(extent[0]) * int(extent[1]) * int(extent[2]) >= 2 ** 62:
        raise ValueError("clouds span too many grid cells for the index")

    def encode(cells):
        rel = cells - lo
        return (rel[:, 0] * extent[1] + rel[:, 1]) * extent[2] + rel[:, 2]

    order = np.argsort(encode(ref_cells), kind="stable")
    refs_sorted = refs[order]
    keys_sorted = encode(ref_cells)[order]

    q_pts = queries[todo]
    for off in _NEIGHBOR_OFFSETS:
        if todo.size == 0:
            break
        keys = encode(q_cells + np.asarray(off, dtype=np.int64))
        left = np.searchsorted(keys_sorted, keys, side="left")
        right = np.searchsorted(keys_sorted, keys, side="right")
        counts = right - left
        nz = np.flatnonzero(counts)
        if nz.size == 0:
            continue
        starts = left[nz]
        cnts = counts[nz]
        total = int(cnts.sum())
        ref_idx = np.repeat(starts, cnts) + (np.arange(total) - np.repeat(np.cumsum(cnts) - cnts, cnts))
        q_idx = np.repeat(nz, cnts)
        d_sq = ((q_pts[q_idx] - refs_sorted[ref_idx]) ** 2).sum(axis=1)
        matched = np.unique(q_idx[d_sq <= tau_sq])
        if matched.size:
            hit[todo[matched]] = True
            keep = np.ones(todo.size, dtype=bool)
            keep[matched] = False
            todo = todo[keep]
            q_cells = q_cells[keep]
            q_pts = q_pts[keep]
    return hit


def fscore(pred: PointCloud, gt: PointCloud, tau: float) -> CloudMetrics:
    """Reconstruction precision/recall/F under match radius tau.

    Precision is the fraction of predicted points within tau of the GT cloud,
    recall the fraction of GT points within tau of the prediction; an empty
    cloud scores 0 on its side.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    precision = float(_has_neighbor_within(pred.points, gt.points, tau).mean()) if len(pred) else 0.0
    recall = float(_has_neighbor_within(gt.points, pred.points, tau).mean()) if len(gt) else 0.0
    return CloudMetrics.from_pr(precision, recall)


def f_edges(aligned: AlignedDepth, gt: DepthRaster, gt_edges,
            intrinsics: CameraIntrinsics, tau: float) -> CloudMetrics | None:
    """F-Score with both clouds restricted to GT depth-boundary pixels.

    The same pixel set feeds both clouds (two depth sources), so the metric
    isolates depth error exactly at boundaries.  Returns None when the GT
    boundary set is empty (missing value, not an error).
    """
    edges = np.asarray(getattr(gt_edges, "edges", gt_edges), dtype=bool)
    if not edges.any():
        return None
    pred_cloud = backproject(aligned.depth, intrinsics, edges)
    gt_cloud = backproject(gt, intrinsics, edges)
    if len(pred_cloud) == 0 and len(gt_cloud) == 0:
        return None
    return fscore(pred_cloud, gt_cloud, tau)
