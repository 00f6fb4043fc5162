"""Depth-boundary extraction and boundary-distance metrics.

Boundaries are detected on log-depth so the edge set depends only on depth
ratios, never on absolute scale.  Accuracy/completion are truncated mean
distances between the predicted and ground-truth boundary pixel sets,
computed on exact Euclidean distance transforms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import DepthRaster, EvalConfig, freeze
from .errors import EmptyMask

try:  # optional: compiles the distance-transform inner loop
    import numba
except ImportError:  # pragma: no cover - exercised via the numpy fallback test
    numba = None


class EdgeSource(enum.Enum):
    GROUND_TRUTH = "ground_truth"
    PREDICTION = "prediction"


@dataclass(frozen=True)
class EdgeMask:
    """Boolean boundary map derived from one raster; edges only on valid pixels."""

    edges: np.ndarray
    source: EdgeSource

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=bool)
        if e.flags.writeable:
            e = e.copy()
            e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @property
    def shape(self):
        return self.edges.shape

    def count(self) -> int:
        return int(self.edges.sum())


@dataclass(frozen=True)
class DistanceField:
    """Per-pixel Euclidean distance to the nearest seed, in pixels.

    With an empty seed set every entry holds a sentinel strictly larger than
    the image diagonal.
    """

    dist: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=np.float64)
        if d.flags.writeable:
            d = d.copy()
            d.setflags(write=False)
        object.__setattr__(self, "dist", d)


def log_depth_edges(depth: DepthRaster, cfg: EvalConfig,
                    source: EdgeSource = EdgeSource.GROUND_TRUTH) -> EdgeMask:
    """Canny-style boundary extraction on the log-depth map.

    Pipeline: median-normalize depth (so the result is invariant to global
    rescaling), take logs, Gaussian-smooth with invalid pixels excluded via
    kernel renormalization, central-difference gradients, four-direction
    non-maximum suppression, then hysteresis with thresholds at the
    ``edge_low_q`` / ``edge_high_q`` quantiles of the gradient magnitude.
    Pixels 8-adjacent to an invalid pixel (or to the image border) are never
    edges, which keeps mask boundaries from reading as depth boundaries.
    """
    valid = depth.valid & (depth.values > 0)
    if not valid.any():
        raise EmptyMask("no positive valid pixel to extract boundaries from")
    vals = depth.values.astype(np.float64)
    # Dividing by the valid median makes power-of-two rescalings bit-exact
    # and keeps the log argument O(1).
    med = float(np.median(vals[valid]))
    log_d = np.zeros_like(vals)
    log_d[valid] = np.log(vals[valid] / med)

    # Normalized convolution: smooth(masked values) / smooth(mask).
    m = valid.astype(np.float64)
    if cfg.edge_sigma > 0:
        num = ndimage.gaussian_filter(log_d * m, cfg.edge_sigma, mode="constant", cval=0.0)
        den = ndimage.gaussian_filter(m, cfg.edge_sigma, mode="constant", cval=0.0)
        smooth = np.where(valid, num / np.where(den > 0, den, 1.0), 0.0)
    else:
        smooth = log_d

    h, w = valid.shape
    # Central differences where both neighbors are valid.
    gx = np.zeros_like(smooth)
    gy = np.zeros_like(smooth)
    gx_ok = np.zeros_like(valid)
    gy_ok = np.zeros_like(valid)
    gx[:, 1:-1] = 0.5 * (smooth[:, 2:] - smooth[:, :-2])
    gy[1:-1, :] = 0.5 * (smooth[2:, :] - smooth[:-2, :])
    gx_ok[:, 1:-1] = valid[:, 2:] & valid[:, :-2]
    gy_ok[1:-1, :] = valid[2:, :] & valid[:-2, :]
    defined = valid & gx_ok & gy_ok
    gx = np.where(defined, gx, 0.0)
    gy = np.where(defined, gy, 0.0)
    mag = np.hypot(gx, gy)

    # Candidate pixels: gradient defined and not next to invalid data/border.
    inv = np.ones((h + 2, w + 2), dtype=bool)
    inv[1:-1, 1:-1] = ~valid
    near_invalid = ndimage.binary_dilation(inv, structure=np.ones((3, 3), bool))[1:-1, 1:-1]
    candidates = defined & ~near_invalid
    if not candidates.any():
        return EdgeMask(freeze(np.zeros_like(valid)), source)

    thin = candidates & _non_maximum_suppression(mag, gx, gy)
    low, high = np.quantile(mag[candidates], [cfg.edge_low_q, cfg.edge_high_q])
    # Inclusive thresholds with a relative tie guard: constant-valued
    # plateaus tie at the quantile up to roundoff and must not vanish; flat
    # regions are already rejected by the strict NMS.
    strong = thin & (mag >= high * (1.0 - _TIE_REL)) & (mag > 0)
    weak = thin & (mag >= low * (1.0 - _TIE_REL)) & (mag > 0)
    if not strong.any():
        return EdgeMask(freeze(np.zeros_like(valid)), source)
    labels, n_labels = ndimage.label(weak, structure=np.ones((3, 3), int))
    keep = np.zeros(n_labels + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return EdgeMask(freeze(keep[labels]), source)


# Relative tolerance treating two magnitudes as tied.  Symmetric structures
# produce exact ties in real arithmetic that float noise (border
# renormalization, log rounding) would otherwise resolve inconsistently.
_TIE_REL = 1e-9


def _non_maximum_suppression(mag, gx, gy):
    """Keep local maxima of ``mag`` along the quantized gradient direction.

    Four direction bins; plateau ties (up to a relative guard) are broken
    toward the positive axis so an ideal two-pixel-wide response thins to a
    single, straight line.
    """
    h, w = mag.shape
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = mag

    # Direction bins by slope comparison (no arctan needed): 0 horizontal,
    # 1 diagonal (+x,+y), 2 vertical, 3 anti-diagonal (-x,+y).
    t_half = np.tan(np.radians(22.5))
    ax = np.abs(gx)
    ay = np.abs(gy)
    horiz = ay <= t_half * ax
    vert = ax <= t_half * ay
    diag_pos = gx * gy > 0

    def shifted(dy, dx):
        return padded[1 + dy:h + 1 + dy, 1 + dx:w + 1 + dx]

    # forward neighbor along the quantized gradient axis, (dy, dx) per bin:
    # 0 -> (0,1), 1 -> (1,1), 2 -> (1,0), 3 -> (1,-1)
    fwd = np.where(horiz, shifted(0, 1),
                   np.where(vert, shifted(1, 0),
                            np.where(diag_pos, shifted(1, 1), shifted(1, -1))))
    bwd = np.where(horiz, shifted(0, -1),
                   np.where(vert, shifted(-1, 0),
                            np.where(diag_pos, shifted(-1, -1), shifted(-1, 1))))
    tol = _TIE_REL * np.maximum(mag, np.maximum(fwd, bwd))
    return (mag > fwd + tol) & (mag >= bwd - tol)


def _as_seed_mask(seed) -> np.ndarray:
    seeds = np.asarray(getattr(seed, "edges", seed), dtype=bool)
    if seeds.ndim != 2:
        raise ValueError("seed mask must be 2D")
    return seeds


def _row_pass_sq(seeds: np.ndarray) -> np.ndarray:
    """Squared distance to the nearest in-row seed; rows without a seed get
    the out-of-range constant (just above the squared diagonal)."""
    h, w = seeds.shape
    big = float(h * h + w * w + 1)
    col = np.arange(w)
    left_idx = np.where(seeds, col, -(w + 1))
    left = np.maximum.accumulate(left_idx, axis=1)
    right_idx = np.where(seeds, col, 2 * (w + 1))
    right = np.minimum.accumulate(right_idx[:, ::-1], axis=1)[:, ::-1]
    d_row = np.minimum(col - left, right - col)
    return np.where(d_row <= w - 1, d_row.astype(np.float64) ** 2, big)


def edt(seed) -> DistanceField:
    """Exact Euclidean distance transform of a boolean seed mask.

    Runs the separable two-pass construction: per-row distances to the
    nearest in-row seed, then the lower envelope of parabolas down each
    column, both on squared distances.  An empty seed mask yields the
    out-of-range sentinel everywhere (larger than the image diagonal).
    """
    seeds = _as_seed_mask(seed)
    return DistanceField(freeze(np.sqrt(_envelope_sq(_row_pass_sq(seeds)))))


def _envelope_sq(f: np.ndarray) -> np.ndarray:
    """min over q of f[q, j] + (i - q)^2, exactly, for every column j.

    Classic single-pass lower-envelope-of-parabolas construction.  Uses the
    compiled scalar loop when numba is installed, otherwise the vectorized
    lockstep variant; both produce identical (integer-exact) results.
    """
    if f.shape[0] > 1 and numba is not None:
        return np.ascontiguousarray(
            _envelope_sq_scalar(np.ascontiguousarray(f.T)).T)
    return _envelope_sq_numpy(f)


def _envelope_sq_scalar_impl(ft):
    m, n = ft.shape
    out = np.empty_like(ft)
    v = np.empty(n, np.int64)
    z = np.empty(n + 1, np.float64)
    for j in range(m):
        row = ft[j]
        k = 0
        v[0] = 0
        z[0] = -np.inf
        z[1] = np.inf
        for q in range(1, n):
            gq = row[q] + q * q
            while True:
                vk = v[k]
                s = (gq - (row[vk] + vk * vk)) / (2.0 * (q - vk))
                if k > 0 and s <= z[k]:
                    k -= 1
                else:
                    break
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
        k = 0
        for i in range(n):
            while z[k + 1] < i:
                k += 1
            d = float(i - v[k])
            out[j, i] = d * d + row[v[k]]
    return out


if numba is not None:
    _envelope_sq_scalar = numba.njit(cache=True)(_envelope_sq_scalar_impl)


def _envelope_sq_numpy(f: np.ndarray) -> np.ndarray:
    n, m = f.shape
    if n == 1:
        return f.copy()
    g = f + (np.arange(n, dtype=np.float64) ** 2)[:, None]  # f[q] + q^2

    # Per-column stacks in flat buffers (1D fancy indexing is much cheaper
    # than row/column pair indexing).  Vertex positions are kept as float64;
    # they are small integers, so the arithmetic below stays exact.
    base = np.arange(m) * n            # column j's stack starts at base[j]
    base_z = np.arange(m) * (n + 1)
    vert = np.zeros(m * n)             # vertex position per stack slot
    gv = np.empty(m * n)               # g at that vertex
    gv[base] = g[0]
    z = np.empty(m * (n + 1))          # envelope boundaries per stack slot
    z[base_z] = -np.inf
    z[base_z + 1] = np.inf
    k = np.zeros(m, dtype=np.intp)     # stack tops

    for q in range(1, n):
        gq = g[q]
        two_q = 2.0 * q
        # one full-width evaluation, then pop only the columns that need it
        idx = base + k
        s = (gq - gv[idx]) / (two_q - 2.0 * vert[idx])
        act = np.flatnonzero((s <= z[base_z + k]) & (k > 0))
        while act.size:
            k[act] -= 1
            ia = base[act] + k[act]
            sa = (gq[act] - gv[ia]) / (two_q - 2.0 * vert[ia])
            s[act] = sa
            act = act[(sa <= z[base_z[act] + k[act]]) & (k[act] > 0)]
        k += 1
        idx = base + k
        vert[idx] = q
        gv[idx] = gq
        idx_z = base_z + k
        z[idx_z] = s
        z[idx_z + 1] = np.inf

    out = np.empty_like(f)
    j = np.zeros(m, dtype=np.intp)
    for i in range(n):
        act = np.flatnonzero(z[base_z + j + 1] < i)
        while act.size:
            j[act] += 1
            act = act[z[base_z[act] + j[act] + 1] < i]
        idx = base + j
        vj = vert[idx]
        # f[vj] recovered exactly from g: all terms are integer-valued
        out[i] = (i - vj) ** 2 + (gv[idx] - vj * vj)
    return out


def edge_accuracy_completion(pred_edges: EdgeMask, gt_edges: EdgeMask,
                             trunc: float) -> tuple[float, float | None]:
    """Truncated mean boundary distances (accuracy, completion), in pixels.

    Accuracy averages, over predicted boundary pixels, the distance to the
    nearest GT boundary pixel, truncated at ``trunc``; completion swaps the
    roles.  An empty prediction scores the worst case ``trunc``; an empty GT
    boundary set leaves completion undefined (None).
    """
    pe = _as_seed_mask(pred_edges)
    ge = _as_seed_mask(gt_edges)
    if pe.shape != ge.shape:
        raise ValueError(f"shape mismatch: {pe.shape} vs {ge.shape}")
    # Empty reference sets mean infinite distances, which truncate to the cap;
    # handled explicitly because the numeric sentinel may sit below ``trunc``
    # on small images.
    if not ge.any():
        return float(trunc), None
    if not pe.any():
        return float(trunc), float(trunc)
    w = pe.shape[1]
    # Both transforms share one envelope run (columns are independent).
    stacked = _envelope_sq(np.hstack([_row_pass_sq(ge), _row_pass_sq(pe)]))
    dist_to_gt = np.sqrt(stacked[:, :w])
    dist_to_pred = np.sqrt(stacked[:, w:])
    acc = float(np.minimum(dist_to_gt[pe], trunc).mean())
    comp = float(np.minimum(dist_to_pred[ge], trunc).mean())
    return acc, comp
