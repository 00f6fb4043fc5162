"""Deterministic synthetic scenes, predictions, and brute-force test oracles.

The benchmark's real captures are not redistributable, so verification runs
on analytic scenes whose exact depth and boundary structure are known by
construction.  Everything here is pure and reproducible: the same spec and
seed always produce bit-identical output.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cloud_metrics import CloudMetrics, PointCloud
from .core import CameraIntrinsics, DepthRaster, PredictionKind
from .dataset import SubmissionMeta, write_submission
from .edge_metrics import DistanceField, EdgeMask, EdgeSource
from .errors import InvalidTransform
from .formats import write_depth_png16


class SceneKind(enum.Enum):
    STEP_PLANES = "step_planes"
    SLANTED_PLANE = "slanted_plane"
    SPHERE_ON_PLANE = "sphere_on_plane"
    INDOOR_BOX = "indoor_box"


# Manifest category per scene kind; mirrors the mixed-environment flavor of
# the real benchmark.
SCENE_CATEGORY = {
    SceneKind.STEP_PLANES: "urban",
    SceneKind.SLANTED_PLANE: "agricultural",
    SceneKind.SPHERE_ON_PLANE: "natural",
    SceneKind.INDOOR_BOX: "indoor",
}


@dataclass(frozen=True)
class SceneSpec:
    kind: SceneKind
    width: int = 64
    height: int = 48
    depth_near: float = 2.0
    depth_far: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.width < 4 or self.height < 4:
            raise ValueError("scene must be at least 4x4")
        if not self.depth_near < self.depth_far:
            raise ValueError("depth_near must be < depth_far")
        if self.depth_near <= 0:
            raise ValueError("depth_near must be positive")


def _camera(width: int, height: int) -> CameraIntrinsics:
    return CameraIntrinsics(fx=0.8 * width, fy=0.8 * width,
                            cx=width / 2.0, cy=height / 2.0)


def _ray_grid(spec: SceneSpec, cam: CameraIntrinsics):
    xs = (np.arange(spec.width) + 0.5 - cam.cx) / cam.fx
    ys = (np.arange(spec.height) + 0.5 - cam.cy) / cam.fy
    return np.meshgrid(xs, ys)


def _analytic_edges(depth: np.ndarray, surface: np.ndarray) -> np.ndarray:
    """Mark pixels whose 4-neighborhood crosses surfaces with a jump at least
    twice the local within-surface variation."""
    h, w = depth.shape
    smooth = np.zeros_like(depth)
    for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        same = np.zeros((h, w), dtype=bool)
        diff = np.zeros((h, w))
        ys = slice(max(dy, 0), h + min(dy, 0))
        yd = slice(max(-dy, 0), h + min(-dy, 0))
        xs = slice(max(dx, 0), w + min(dx, 0))
        xd = slice(max(-dx, 0), w + min(-dx, 0))
        same[yd, xd] = surface[yd, xd] == surface[ys, xs]
        diff[yd, xd] = np.abs(depth[yd, xd] - depth[ys, xs])
        smooth = np.maximum(smooth, np.where(same, diff, 0.0))
    edges = np.zeros((h, w), dtype=bool)
    for dy, dx in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        ys = slice(max(dy, 0), h + min(dy, 0))
        yd = slice(max(-dy, 0), h + min(-dy, 0))
        xs = slice(max(dx, 0), w + min(dx, 0))
        xd = slice(max(-dx, 0), w + min(-dx, 0))
        crossing = surface[yd, xd] != surface[ys, xs]
        jump = np.abs(depth[yd, xd] - depth[ys, xs])
        ref = 2.0 * np.maximum(smooth[yd, xd], smooth[ys, xs])
        edges[yd, xd] |= crossing & (jump >= ref)
    return edges


def gen_scene(spec: SceneSpec) -> tuple[DepthRaster, CameraIntrinsics, EdgeMask]:
    """Render the analytic depth map, camera, and geometry-derived edge mask."""
    cam = _camera(spec.width, spec.height)
    rng = np.random.default_rng(spec.seed)
    u, v = _ray_grid(spec, cam)
    near, far = spec.depth_near, spec.depth_far

    if spec.kind is SceneKind.STEP_PLANES:
        split = spec.width // 2
        depth = np.full((spec.height, spec.width), near, dtype=np.float64)
        depth[:, split:] = far
        surface = (np.arange(spec.width)[None, :] >= split).astype(np.int8)
        surface = np.broadcast_to(surface, depth.shape)
        edges = _analytic_edges(depth, surface)

    elif spec.kind is SceneKind.SLANTED_PLANE:
        ramp = near + (far - near) * (np.arange(spec.width) + 0.5) / spec.width
        depth = np.broadcast_to(ramp[None, :], (spec.height, spec.width)).copy()
        edges = np.zeros(depth.shape, dtype=bool)

    elif spec.kind is SceneKind.SPHERE_ON_PLANE:
        radius = 0.25 * (far - near) * (1.0 + 0.2 * rng.uniform(-1, 1))
        center_z = near + radius
        # keep the silhouette inside the frame
        ox = 0.1 * center_z * rng.uniform(-1, 1) * (spec.width / spec.height)
        oy = 0.1 * center_z * rng.uniform(-1, 1)
        a = u * u + v * v + 1.0
        b = u * ox + v * oy + center_z
        c = ox * ox + oy * oy + center_z * center_z - radius * radius
        disc = b * b - a * c
        hit = disc >= 0
        t = np.where(hit, (b - np.sqrt(np.where(hit, disc, 0.0))) / a, np.inf)
        hit &= t > 0
        depth = np.where(hit, t, far)
        surface = hit.astype(np.int8)
        edges = _analytic_edges(depth, surface)

    elif spec.kind is SceneKind.INDOOR_BOX:
        half_x = far * rng.uniform(0.35, 0.5)
        half_y = far * rng.uniform(0.3, 0.45)
        with np.errstate(divide="ignore"):
            t_wall = half_x / np.abs(u)
            t_floor = half_y / np.abs(v)
        depth = np.minimum(np.minimum(t_wall, t_floor), far)
        edges = np.zeros(depth.shape, dtype=bool)  # concave corners: creases, no jumps

    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown scene kind {spec.kind}")

    gt = DepthRaster(np.ascontiguousarray(depth))
    return gt, cam, EdgeMask(edges, EdgeSource.GROUND_TRUTH)


def synth_prediction(gt: DepthRaster, kind: PredictionKind, s: float = 1.0,
                     t: float = 0.0, noise_sigma: float = 0.0,
                     seed: int = 0) -> DepthRaster:
    """Build a prediction of the requested kind from ground truth.

    metric: d + noise; affine_invariant: s*d + t + noise; scale_invariant:
    s*d + noise; disparity: 1/(s*d + t) + noise.  The disparity transform
    requires s*d + t > 0 on every valid pixel.
    """
    if not (np.isfinite(s) and np.isfinite(t)):
        raise InvalidTransform("scale and shift must be finite")
    d = gt.values.astype(np.float64)
    valid = gt.valid
    if kind is PredictionKind.METRIC:
        base = d.copy()
    elif kind is PredictionKind.AFFINE_INVARIANT:
        base = s * d + t
    elif kind is PredictionKind.SCALE_INVARIANT:
        base = s * d
    elif kind is PredictionKind.DISPARITY:
        lin = s * d + t
        if np.any(valid & (lin <= 0)):
            raise InvalidTransform("disparity transform needs s*d + t > 0 on valid pixels")
        with np.errstate(divide="ignore"):
            base = np.where(valid, 1.0 / np.where(valid, lin, 1.0), 0.0)
    else:
        raise InvalidTransform(f"unsupported prediction kind {kind}")
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        base = base + rng.normal(0.0, noise_sigma, size=base.shape)
    out = np.where(valid, base, 0.0)
    if not np.all(np.isfinite(out[valid])):
        raise InvalidTransform("transform produced non-finite prediction values")
    return DepthRaster(out, valid)


# --- brute-force oracles (test references, O(N^2)) --------------------------

def oracle_nn(pred: PointCloud, gt: PointCloud, tau: float) -> CloudMetrics:
    """All-pairs recomputation of the F-Score contract."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    tau_sq = tau * tau

    def frac_within(queries, refs):
        if len(queries) == 0:
            return 0.0
        if len(refs) == 0:
            return 0.0
        hit = np.zeros(len(queries), dtype=bool)
        for i, q in enumerate(queries):
            d_sq = ((q[None, :] - refs) ** 2).sum(axis=1)
            hit[i] = bool((d_sq <= tau_sq).any())
        return float(hit.mean())

    precision = frac_within(pred.points, gt.points) if len(pred) else 0.0
    recall = frac_within(gt.points, pred.points) if len(gt) else 0.0
    return CloudMetrics.from_pr(precision, recall)


def oracle_edt(seed) -> DistanceField:
    """All-pairs recomputation of the distance transform contract."""
    seeds = np.asarray(getattr(seed, "edges", seed), dtype=bool)
    h, w = seeds.shape
    sentinel = np.sqrt(float(h * h + w * w + 1))
    ys, xs = np.nonzero(seeds)
    if len(ys) == 0:
        return DistanceField(np.full((h, w), sentinel))
    gy, gx = np.mgrid[0:h, 0:w]
    d_sq = np.full((h, w), np.inf)
    for sy, sx in zip(ys, xs):
        d_sq = np.minimum(d_sq, (gy - sy) ** 2 + (gx - sx) ** 2)
    return DistanceField(np.sqrt(d_sq))


# --- on-disk synthetic challenge --------------------------------------------

def challenge_scene_specs(n_frames: int, width: int, height: int,
                          seed: int) -> list[SceneSpec]:
    """Deterministic mix of scene kinds and depth ranges for a challenge set."""
    rng = np.random.default_rng(seed)
    kinds = list(SceneKind)
    specs = []
    for i in range(n_frames):
        near = float(rng.uniform(1.0, 4.0))
        far = float(near + rng.uniform(4.0, 20.0))
        specs.append(SceneSpec(
            kind=kinds[i % len(kinds)],
            width=width,
            height=height,
            depth_near=near,
            depth_far=far,
            seed=int(rng.integers(0, 2 ** 31)),
        ))
    return specs


def quantize_depth(raster: DepthRaster, divisor: float = 256.0) -> DepthRaster:
    """Snap depths to the PNG16 grid so on-disk GT matches in-memory GT."""
    q = np.rint(raster.values * divisor) / divisor
    return DepthRaster(np.where(raster.valid, q, 0.0), raster.valid)


def write_challenge(out_dir, n_frames: int = 8, width: int = 64, height: int = 48,
                    seed: int = 0, pred_kind: PredictionKind = PredictionKind.METRIC,
                    scale: float = 1.0, shift: float = 0.0, noise_sigma: float = 0.0,
                    team: str = "reference", divisor: float = 256.0) -> tuple[Path, Path]:
    """Emit a complete synthetic challenge: manifest, PNG16 ground truth, and a
    reference submission.  Returns (manifest_path, submission_dir)."""
    out_dir = Path(out_dir)
    gt_dir = out_dir / "gt"
    gt_dir.mkdir(parents=True, exist_ok=True)
    frames = []
    predictions = {}
    for i, spec in enumerate(challenge_scene_specs(n_frames, width, height, seed)):
        frame_id = f"{i:04d}"
        gt, cam, _ = gen_scene(spec)
        gt = quantize_depth(gt, divisor)
        (gt_dir / f"{frame_id}.png").write_bytes(write_depth_png16(gt, divisor))
        predictions[frame_id] = synth_prediction(
            gt, pred_kind, s=scale, t=shift, noise_sigma=noise_sigma, seed=spec.seed ^ 0x5EED)
        frames.append({
            "frame_id": frame_id,
            "category": SCENE_CATEGORY[spec.kind],
            "gt": f"gt/{frame_id}.png",
            "intrinsics": {"fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy},
            "width": spec.width,
            "height": spec.height,
        })
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps({"frames": frames}, indent=2))
    meta = SubmissionMeta(team=team, prediction_kind=pred_kind)
    submission_dir = write_submission(out_dir / "submission", meta, predictions)
    return manifest_path, submission_dir
