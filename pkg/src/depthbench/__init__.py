"""Benchmark evaluation toolkit for zero-shot monocular depth estimation.

Library layout:

* :mod:`depthbench.core` - domain types and configuration
* :mod:`depthbench.formats` - PFM / 16-bit PNG codecs
* :mod:`depthbench.dataset` - manifests and submission archives
* :mod:`depthbench.alignment` - prediction conversion and scale/shift fitting
* :mod:`depthbench.image_metrics` - pixel-wise metrics
* :mod:`depthbench.cloud_metrics` - back-projection and F-Score
* :mod:`depthbench.edge_metrics` - boundary extraction and distance metrics
* :mod:`depthbench.synthetic` - deterministic scenes and brute-force oracles
* :mod:`depthbench.evaluation` - per-frame pipeline, aggregation, ranking
* :mod:`depthbench.server` - phased submission service
"""

from .alignment import (
    AlignedDepth,
    apply_alignment,
    median_scale,
    resize_bilinear,
    solve_lse_affine,
    to_depth_space,
)
from .cloud_metrics import CloudMetrics, PointCloud, backproject, f_edges, fscore
from .core import (
    AffineAlignment,
    AlignMethod,
    CameraIntrinsics,
    DepthRaster,
    EvalConfig,
    MetricReport,
    PredictionKind,
    mask_ground_truth,
    validate_config,
)
from .dataset import (
    FrameRecord,
    SubmissionMeta,
    load_manifest,
    load_submission,
    write_submission,
)
from .edge_metrics import (
    DistanceField,
    EdgeMask,
    EdgeSource,
    edge_accuracy_completion,
    edt,
    log_depth_edges,
)
from .evaluation import (
    AggregateReport,
    LeaderboardRow,
    emit_leaderboard,
    emit_report,
    evaluate_frame,
    evaluate_submission,
    parse_report,
    rank,
)
from .formats import read_depth_png16, read_pfm, write_depth_png16, write_pfm
from .image_metrics import ImageMetrics, image_metrics
from .synthetic import (
    SceneKind,
    SceneSpec,
    gen_scene,
    oracle_edt,
    oracle_nn,
    synth_prediction,
    write_challenge,
)

__version__ = "0.1.0"

__all__ = [
    "AffineAlignment",
    "AggregateReport",
    "AlignMethod",
    "AlignedDepth",
    "CameraIntrinsics",
    "CloudMetrics",
    "DepthRaster",
    "DistanceField",
    "EdgeMask",
    "EdgeSource",
    "EvalConfig",
    "FrameRecord",
    "ImageMetrics",
    "LeaderboardRow",
    "MetricReport",
    "PointCloud",
    "PredictionKind",
    "SceneKind",
    "SceneSpec",
    "SubmissionMeta",
    "apply_alignment",
    "backproject",
    "edge_accuracy_completion",
    "edt",
    "emit_leaderboard",
    "emit_report",
    "evaluate_frame",
    "evaluate_submission",
    "f_edges",
    "fscore",
    "gen_scene",
    "image_metrics",
    "load_manifest",
    "load_submission",
    "log_depth_edges",
    "mask_ground_truth",
    "median_scale",
    "oracle_edt",
    "oracle_nn",
    "parse_report",
    "rank",
    "read_depth_png16",
    "read_pfm",
    "resize_bilinear",
    "solve_lse_affine",
    "synth_prediction",
    "to_depth_space",
    "validate_config",
    "write_challenge",
    "write_depth_png16",
    "write_pfm",
    "write_submission",
]
