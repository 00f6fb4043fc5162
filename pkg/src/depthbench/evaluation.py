"""End-to-end submission evaluation, aggregation, ranking, and report formats.

Per frame: load GT, resample the prediction to GT resolution in its native
space, invert disparity if needed, fit the alignment, clamp, then run the
image, pointcloud, and edge metric suites.  Per-frame failures downgrade to
missing values so one bad frame cannot abort a whole submission.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .alignment import (
    apply_alignment,
    median_scale,
    resize_bilinear,
    solve_lse_affine,
    to_depth_space,
)
from .cloud_metrics import backproject, f_edges, fscore
from .core import (
    METRIC_FIELDS,
    DepthRaster,
    EvalConfig,
    MetricReport,
    PredictionKind,
    mask_ground_truth,
    validate_config,
)
from .dataset import ALIGNMENT_CHOICES, FrameRecord, SubmissionMeta
from .edge_metrics import EdgeSource, edge_accuracy_completion, log_depth_edges
from .errors import DepthbenchError, ParseError
from .formats import read_depth_png16, read_pfm
from .image_metrics import image_metrics

REPORT_SCHEMA = "depthbench-report-v1"


@dataclass(frozen=True)
class MetricSummary:
    """Mean of each metric over the frames where it is defined."""

    frame_count: int
    means: dict
    coverage: dict  # metric -> number of frames contributing

    def to_dict(self) -> dict:
        return {"frame_count": self.frame_count, "means": self.means,
                "coverage": self.coverage}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricSummary":
        return cls(int(d["frame_count"]), dict(d["means"]), dict(d["coverage"]))


@dataclass(frozen=True)
class AggregateReport:
    team: str
    alignment_method: str
    config: EvalConfig
    frame_order: tuple
    frame_categories: dict
    per_frame: dict  # frame_id -> MetricReport
    per_category: dict  # category -> MetricSummary
    overall: MetricSummary
    aggregation: str = "frame_mean"  # or "pixel_pooled"


def summarize(reports: list[MetricReport], weights=None) -> MetricSummary:
    """Mean each metric over the frames where it is defined.

    Unweighted by default (every frame counts once).  With ``weights``
    (typically valid pixel counts) the means are pooled; RMSE pools in the
    squared domain so the result equals the RMSE over the combined pixels.
    """
    means: dict = {}
    coverage: dict = {}
    for name in METRIC_FIELDS:
        idx = [i for i, r in enumerate(reports) if getattr(r, name) is not None]
        vals = [getattr(reports[i], name) for i in idx]
        coverage[name] = len(vals)
        if not vals:
            means[name] = None
        elif weights is None:
            means[name] = sum(vals) / len(vals)
        else:
            ws = [weights[i] for i in idx]
            total = sum(ws)
            if name == "rmse":
                means[name] = (sum(w * v * v for w, v in zip(ws, vals)) / total) ** 0.5
            else:
                means[name] = sum(w * v for w, v in zip(ws, vals)) / total
    return MetricSummary(len(reports), means, coverage)


def evaluate_frame(pred: DepthRaster, kind: PredictionKind, gt_raw: DepthRaster,
                   intrinsics, cfg: EvalConfig, alignment: str = "lse") -> MetricReport:
    """Run the full per-frame pipeline and assemble the metric vector."""
    if alignment not in ALIGNMENT_CHOICES:
        raise ValueError(f"alignment must be one of {ALIGNMENT_CHOICES}")
    notes: list[str] = []
    gt = mask_ground_truth(gt_raw, cfg)
    try:
        pred = resize_bilinear(pred, gt.width, gt.height)
        pred = to_depth_space(pred, kind, cfg.depth_min)
    except DepthbenchError as exc:
        return MetricReport(notes=(f"conversion_failed:{type(exc).__name__}",))
    mask = pred.valid & gt.valid
    n_joint = int(mask.sum())
    if n_joint < 2:
        return MetricReport(valid_pixel_count=n_joint, notes=("too_few_pixels",))
    try:
        if alignment == "median":
            fit = median_scale(pred, gt, mask)
        else:
            fit = solve_lse_affine(pred, gt, mask, robust=(alignment == "lse_robust"))
    except DepthbenchError as exc:
        return MetricReport(valid_pixel_count=n_joint,
                            notes=(f"alignment_failed:{type(exc).__name__}",))
    if fit.degenerate:
        notes.append("degenerate_fit")
    aligned = apply_alignment(pred, fit, cfg)
    if aligned.clamped_count:
        notes.append(f"clamped:{aligned.clamped_count}")

    img = image_metrics(aligned, gt, cfg)

    pred_cloud = backproject(aligned.depth, intrinsics, mask)
    gt_cloud = backproject(gt, intrinsics, mask)
    cloud = fscore(pred_cloud, gt_cloud, cfg.fscore_tau)

    f_edges_val = edge_acc = edge_comp = None
    try:
        gt_edges = log_depth_edges(gt, cfg, EdgeSource.GROUND_TRUTH)
        pred_edges = log_depth_edges(aligned.depth.with_valid(mask), cfg,
                                     EdgeSource.PREDICTION)
        edge_cloud = f_edges(aligned, gt, gt_edges, intrinsics, cfg.fscore_tau)
        f_edges_val = None if edge_cloud is None else edge_cloud.f_score
        edge_acc, edge_comp = edge_accuracy_completion(pred_edges, gt_edges,
                                                       cfg.edge_trunc)
        if edge_cloud is None:
            notes.append("no_gt_edges")
    except DepthbenchError as exc:
        notes.append(f"edge_metrics_failed:{type(exc).__name__}")

    return MetricReport(
        mae=img.mae, rmse=img.rmse, absrel=img.absrel,
        delta1=img.delta1, delta2=img.delta2, delta3=img.delta3,
        f_score=cloud.f_score, f_edges=f_edges_val,
        edge_acc=edge_acc, edge_comp=edge_comp,
        valid_pixel_count=n_joint, notes=tuple(notes),
    )


def frame_edge_masks(pred: DepthRaster, kind: PredictionKind, gt_raw: DepthRaster,
                     cfg: EvalConfig, alignment: str = "lse"):
    """(gt_edges, pred_edges) for one frame, for debug dumps.

    Re-runs the alignment portion of the pipeline; intended for inspection,
    not for the hot path.
    """
    gt = mask_ground_truth(gt_raw, cfg)
    pred = resize_bilinear(pred, gt.width, gt.height)
    pred = to_depth_space(pred, kind, cfg.depth_min)
    mask = pred.valid & gt.valid
    if alignment == "median":
        fit = median_scale(pred, gt, mask)
    else:
        fit = solve_lse_affine(pred, gt, mask, robust=(alignment == "lse_robust"))
    aligned = apply_alignment(pred, fit, cfg)
    gt_edges = log_depth_edges(gt, cfg, EdgeSource.GROUND_TRUTH)
    pred_edges = log_depth_edges(aligned.depth.with_valid(mask), cfg,
                                 EdgeSource.PREDICTION)
    return gt_edges, pred_edges


def load_ground_truth(record: FrameRecord, cfg: EvalConfig) -> DepthRaster:
    data = record.gt_path.read_bytes()
    if record.gt_path.suffix == ".pfm":
        raster = read_pfm(data)
    else:
        raster = read_depth_png16(data)
    if raster.shape != (record.height, record.width):
        raise ParseError(
            f"GT for frame {record.frame_id!r} is {raster.shape}, manifest says "
            f"({record.height}, {record.width})")
    return raster


def evaluate_submission(manifest: list[FrameRecord],
                        submission: tuple[SubmissionMeta, dict],
                        cfg: EvalConfig | None = None,
                        alignment: str = "lse",
                        workers: int = 1,
                        pixel_pooled: bool = False) -> AggregateReport:
    """Evaluate a loaded submission against every manifest frame.

    Frames are processed independently (optionally by a thread pool) and
    merged in manifest order, so results do not depend on scheduling.
    Aggregates average per-frame metrics unweighted; ``pixel_pooled=True``
    weights frames by their valid pixel count instead.
    """
    cfg = cfg or EvalConfig()
    validate_config(cfg)
    meta, predictions = submission

    def run(record: FrameRecord) -> MetricReport:
        gt = load_ground_truth(record, cfg)
        return evaluate_frame(predictions[record.frame_id], meta.prediction_kind,
                              gt, record.intrinsics, cfg, alignment)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, manifest))
    else:
        results = [run(r) for r in manifest]

    per_frame = {rec.frame_id: rep for rec, rep in zip(manifest, results)}
    frame_categories = {rec.frame_id: rec.category for rec in manifest}
    categories: dict[str, list[MetricReport]] = {}
    for rec, rep in zip(manifest, results):
        categories.setdefault(rec.category, []).append(rep)

    def agg(reps):
        weights = [r.valid_pixel_count for r in reps] if pixel_pooled else None
        return summarize(reps, weights)

    return AggregateReport(
        team=meta.team,
        alignment_method=alignment,
        config=cfg,
        frame_order=tuple(rec.frame_id for rec in manifest),
        frame_categories=frame_categories,
        per_frame=per_frame,
        per_category={cat: agg(reps) for cat, reps in categories.items()},
        overall=agg(results),
        aggregation="pixel_pooled" if pixel_pooled else "frame_mean",
    )


# --- ranking -----------------------------------------------------------------

@dataclass(frozen=True)
class LeaderboardRow:
    rank: int
    team: str
    f_score: float | None
    absrel: float | None
    metrics: dict = field(default_factory=dict)


def rank(entries: list[tuple[str, AggregateReport]]) -> list[LeaderboardRow]:
    """Order teams by descending overall F-Score.

    Ties break by ascending AbsRel, then team name; rank numbers use standard
    competition ranking over the (F-Score, AbsRel) pair, so fully tied teams
    share a rank.
    """
    if not entries:
        raise ValueError("rank needs at least one report")

    def sort_key(item):
        team, report = item
        f = report.overall.means.get("f_score")
        a = report.overall.means.get("absrel")
        return (f is None, -(f if f is not None else 0.0),
                a is None, a if a is not None else 0.0, team)

    ordered = sorted(entries, key=sort_key)
    rows: list[LeaderboardRow] = []
    prev_key = None
    prev_rank = 0
    for i, (team, report) in enumerate(ordered):
        f = report.overall.means.get("f_score")
        a = report.overall.means.get("absrel")
        key = (f, a)
        this_rank = prev_rank if key == prev_key else i + 1
        rows.append(LeaderboardRow(rank=this_rank, team=team, f_score=f, absrel=a,
                                   metrics=dict(report.overall.means)))
        prev_key, prev_rank = key, this_rank
    return rows


# --- serialization ------------------------------------------------------------

def report_to_dict(report: AggregateReport) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "team": report.team,
        "alignment_method": report.alignment_method,
        "aggregation": report.aggregation,
        "config": report.config.to_dict(),
        "config_digest": report.config.digest(),
        "frame_order": list(report.frame_order),
        "frame_categories": dict(report.frame_categories),
        "per_frame": {fid: rep.to_dict() for fid, rep in report.per_frame.items()},
        "per_category": {cat: s.to_dict() for cat, s in report.per_category.items()},
        "overall": report.overall.to_dict(),
    }


def report_from_dict(doc: dict) -> AggregateReport:
    if doc.get("schema") != REPORT_SCHEMA:
        raise ParseError(f"unknown report schema {doc.get('schema')!r}")
    return AggregateReport(
        team=doc["team"],
        alignment_method=doc["alignment_method"],
        config=EvalConfig.from_dict(doc["config"]),
        frame_order=tuple(doc["frame_order"]),
        frame_categories=dict(doc["frame_categories"]),
        per_frame={fid: MetricReport.from_dict(d) for fid, d in doc["per_frame"].items()},
        per_category={cat: MetricSummary.from_dict(d)
                      for cat, d in doc["per_category"].items()},
        overall=MetricSummary.from_dict(doc["overall"]),
        aggregation=doc.get("aggregation", "frame_mean"),
    )


def parse_report(data: bytes) -> AggregateReport:
    try:
        return report_from_dict(json.loads(data))
    except (json.JSONDecodeError, KeyError) as exc:
        raise ParseError(f"cannot parse report: {exc}") from None


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coverage_cell(summary: MetricSummary) -> str:
    """Compact note of metrics defined on fewer frames than the summary spans."""
    partial = [f"{name}:{summary.coverage[name]}/{summary.frame_count}"
               for name in METRIC_FIELDS
               if summary.coverage[name] < summary.frame_count]
    return ";".join(partial)


def emit_report(report: AggregateReport, fmt: str = "json") -> bytes:
    """Render a report: canonical JSON, per-frame CSV, or a markdown table."""
    if fmt == "json":
        doc = report_to_dict(report)
        return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["scope", "id", "category"] + list(METRIC_FIELDS)
                        + ["valid_pixel_count", "coverage"])
        for fid in report.frame_order:
            rep = report.per_frame[fid]
            writer.writerow(["frame", fid, report.frame_categories[fid]]
                            + [_fmt_cell(getattr(rep, m)) for m in METRIC_FIELDS]
                            + [rep.valid_pixel_count, ""])
        for cat in sorted(report.per_category):
            s = report.per_category[cat]
            writer.writerow(["category", cat, ""]
                            + [_fmt_cell(s.means[m]) for m in METRIC_FIELDS]
                            + ["", _coverage_cell(s)])
        writer.writerow(["overall", "", ""]
                        + [_fmt_cell(report.overall.means[m]) for m in METRIC_FIELDS]
                        + ["", _coverage_cell(report.overall)])
        return buf.getvalue().encode()
    if fmt == "markdown":
        rows = rank([(report.team, report)])
        return emit_leaderboard(rows, "markdown")
    raise ValueError(f"unsupported format {fmt!r}")


_BOARD_COLUMNS = ("f_score", "mae", "rmse", "absrel", "delta1", "delta2", "delta3",
                  "f_edges", "edge_acc", "edge_comp")


def emit_leaderboard(rows: list[LeaderboardRow], fmt: str = "markdown") -> bytes:
    """Render a ranked leaderboard; markdown has one header row and one row per team."""
    if fmt == "json":
        doc = [{"rank": r.rank, "team": r.team, "f_score": r.f_score,
                "absrel": r.absrel, "metrics": r.metrics} for r in rows]
        return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rank", "team"] + list(_BOARD_COLUMNS))
        for r in rows:
            writer.writerow([r.rank, r.team]
                            + [_fmt_cell(r.metrics.get(c)) for c in _BOARD_COLUMNS])
        return buf.getvalue().encode()
    if fmt == "markdown":
        def cell(value):
            return "-" if value is None else f"{value:.4f}"
        lines = ["| rank | team | " + " | ".join(_BOARD_COLUMNS) + " |",
                 "|" + "---|" * (len(_BOARD_COLUMNS) + 2)]
        for r in rows:
            lines.append(f"| {r.rank} | {r.team} | "
                         + " | ".join(cell(r.metrics.get(c)) for c in _BOARD_COLUMNS)
                         + " |")
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unsupported format {fmt!r}")
