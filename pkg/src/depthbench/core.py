"""Domain types shared by every stage of the evaluation pipeline.

The conventions fixed here are load-bearing for the rest of the package:

* depth is stored in meters, disparity in 1/meters, affine-invariant codes
  are unitless;
* a raster pixel participates in evaluation only where its validity flag is
  set, and a set flag guarantees the stored value is finite;
* ground-truth pixels are valid iff the stored depth is finite, strictly
  positive and no larger than ``depth_max`` (zero is the common sentinel for
  missing lidar returns).
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import InvalidConfig, InvalidRaster


def freeze(arr: np.ndarray) -> np.ndarray:
    """Mark a freshly built array read-only so constructors share it, not copy it.

    Only for arrays the caller just created and will not touch again.
    """
    arr.setflags(write=False)
    return arr


class DepthRaster:
    """Dense 2D grid of per-pixel values with a validity mask.

    Holds ground-truth depth maps as well as raw predictions of any kind.
    Arrays are made read-only at construction so instances can be shared
    freely between workers.
    """

    __slots__ = ("values", "valid")

    def __init__(self, values, valid=None):
        values = np.asarray(values)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidRaster(f"expected a non-empty 2D grid, got shape {values.shape}")
        if not np.issubdtype(values.dtype, np.floating):
            values = values.astype(np.float64)
        if valid is None:
            valid = np.isfinite(values)
        else:
            valid = np.asarray(valid, dtype=bool)
            if valid.shape != values.shape:
                raise InvalidRaster(
                    f"valid mask shape {valid.shape} does not match values shape {values.shape}"
                )
            if not np.all(np.isfinite(values[valid])):
                raise InvalidRaster("non-finite value marked valid")
        # Never freeze a caller-owned buffer: copy unless already read-only.
        if values.flags.writeable:
            values = values.copy()
            values.setflags(write=False)
        if valid.flags.writeable:
            valid = valid.copy()
            valid.setflags(write=False)
        self.values = values
        self.valid = valid

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def valid_count(self) -> int:
        return int(self.valid.sum())

    def with_valid(self, valid) -> "DepthRaster":
        """Same values, different validity mask."""
        mask = np.asarray(valid, dtype=bool) & np.isfinite(self.values)
        return DepthRaster(self.values, freeze(mask))

    def __eq__(self, other):
        if not isinstance(other, DepthRaster):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.valid, other.valid)
            and np.array_equal(self.values[self.valid], other.values[other.valid])
        )

    def __repr__(self):
        return f"DepthRaster({self.width}x{self.height}, {self.valid_count()} valid)"


class PredictionKind(enum.Enum):
    """How a submission encodes depth; decides inversion and alignment handling."""

    DISPARITY = "disparity"
    AFFINE_INVARIANT = "affine_invariant"
    SCALE_INVARIANT = "scale_invariant"
    METRIC = "metric"

    @classmethod
    def parse(cls, text: str) -> "PredictionKind":
        for kind in cls:
            if kind.value == text:
                return kind
        raise ValueError(
            f"unknown prediction kind {text!r}; expected one of "
            f"{[k.value for k in cls]}"
        )

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels; principal point uses half-pixel centers."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (math.isfinite(self.fx) and self.fx > 0):
            raise InvalidRaster(f"fx must be positive, got {self.fx}")
        if not (math.isfinite(self.fy) and self.fy > 0):
            raise InvalidRaster(f"fy must be positive, got {self.fy}")
        if not (math.isfinite(self.cx) and math.isfinite(self.cy)):
            raise InvalidRaster("principal point must be finite")


class AlignMethod(enum.Enum):
    LSE_AFFINE = "lse_affine"
    MEDIAN_SCALE = "median_scale"
    IDENTITY = "identity"


@dataclass(frozen=True)
class AffineAlignment:
    """Fitted ``d = scale * p + shift`` map from prediction space to meters.

    ``degenerate`` flags fits where the prediction was near-constant and the
    scale fell back to 1.
    """

    scale: float
    shift: float
    method: AlignMethod
    degenerate: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.scale) and math.isfinite(self.shift)):
            raise InvalidRaster(f"alignment must be finite, got ({self.scale}, {self.shift})")
        if self.method is AlignMethod.MEDIAN_SCALE and self.scale <= 0:
            raise InvalidRaster("median scaling requires a positive scale")
        if self.method is AlignMethod.IDENTITY and not (self.scale == 1.0 and self.shift == 0.0):
            raise InvalidRaster("identity alignment must be (1, 0)")

    @classmethod
    def identity(cls) -> "AffineAlignment":
        return cls(1.0, 0.0, AlignMethod.IDENTITY)


@dataclass(frozen=True)
class EvalConfig:
    """Every tunable constant of the metric suite, in one place.

    Defaults follow the common conventions of the field (ratio-threshold base
    1.25, 10 px edge truncation); the pointcloud threshold ``fscore_tau`` and
    the edge-detector settings are deliberately exposed so a benchmark
    operator can pin their own values.
    """

    depth_min: float = 0.001       # meters; lower clamp after alignment
    depth_max: float = 100.0       # meters; upper clamp and GT validity cutoff
    fscore_tau: float = 0.10       # meters; pointcloud match radius
    edge_trunc: float = 10.0       # pixels; cap on edge distance means
    edge_sigma: float = 1.0        # pixels; smoothing before boundary extraction
    edge_low_q: float = 0.90       # hysteresis low threshold quantile
    edge_high_q: float = 0.95      # hysteresis high threshold quantile
    delta_base: float = 1.25       # ratio-threshold base for the delta triplet

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "EvalConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(sorted(unknown)[0], "unknown config field")
        return cls(**data)

    def digest(self) -> str:
        """Stable fingerprint of the configuration, quoted in reports and responses."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def validate_config(cfg: EvalConfig) -> None:
    """Raise :class:`InvalidConfig` naming the first field that violates its constraint."""
    def finite(x):
        return isinstance(x, (int, float)) and math.isfinite(x)

    if not finite(cfg.depth_min) or cfg.depth_min <= 0:
        raise InvalidConfig("depth_min", "must be finite and > 0")
    if not finite(cfg.depth_max) or cfg.depth_max <= cfg.depth_min:
        raise InvalidConfig("depth_max", "must be finite and > depth_min")
    if not finite(cfg.fscore_tau) or cfg.fscore_tau <= 0:
        raise InvalidConfig("fscore_tau", "must be finite and > 0")
    if not finite(cfg.edge_trunc) or cfg.edge_trunc < 1:
        raise InvalidConfig("edge_trunc", "must be finite and >= 1")
    if not finite(cfg.edge_sigma) or cfg.edge_sigma < 0:
        raise InvalidConfig("edge_sigma", "must be finite and >= 0")
    if not finite(cfg.edge_low_q) or not 0 < cfg.edge_low_q < 1:
        raise InvalidConfig("edge_low_q", "must lie in (0, 1)")
    if not finite(cfg.edge_high_q) or not cfg.edge_low_q < cfg.edge_high_q < 1:
        raise InvalidConfig("edge_high_q", "must lie in (edge_low_q, 1)")
    if not finite(cfg.delta_base) or cfg.delta_base <= 1:
        raise InvalidConfig("delta_base", "must be > 1")


def mask_ground_truth(raster: DepthRaster, cfg: EvalConfig) -> DepthRaster:
    """Apply the GT validity rule: finite, strictly positive, <= depth_max."""
    v = raster.values
    ok = raster.valid & np.isfinite(v) & (v > 0) & (v <= cfg.depth_max)
    return raster.with_valid(ok)


# Per-frame metric fields, in report order. f_edges and edge_comp may be
# missing on frames whose ground truth has no boundary pixels.
METRIC_FIELDS = (
    "mae",
    "rmse",
    "absrel",
    "delta1",
    "delta2",
    "delta3",
    "f_score",
    "f_edges",
    "edge_acc",
    "edge_comp",
)


@dataclass(frozen=True)
class MetricReport:
    """Full per-frame metric vector. ``None`` marks a metric undefined on this frame."""

    mae: float | None = None
    rmse: float | None = None
    absrel: float | None = None
    delta1: float | None = None
    delta2: float | None = None
    delta3: float | None = None
    f_score: float | None = None
    f_edges: float | None = None
    edge_acc: float | None = None
    edge_comp: float | None = None
    valid_pixel_count: int = 0
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        out = {name: getattr(self, name) for name in METRIC_FIELDS}
        out["valid_pixel_count"] = self.valid_pixel_count
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MetricReport":
        kw = {name: data.get(name) for name in METRIC_FIELDS}
        kw["valid_pixel_count"] = int(data.get("valid_pixel_count", 0))
        kw["notes"] = tuple(data.get("notes", ()))
        return cls(**kw)
