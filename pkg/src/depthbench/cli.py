"""Command-line harness.

Subcommands: ``evaluate`` a submission against a manifest, ``rank`` stored
reports into a leaderboard, ``gen-fixtures`` to emit a synthetic challenge,
and ``serve`` to run the submission service.  Exit codes: 0 success, 1
validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import EvalConfig, PredictionKind, validate_config
from .dataset import ALIGNMENT_CHOICES, load_manifest, load_submission
from .errors import DepthbenchError, ParseError
from .evaluation import (
    emit_leaderboard,
    emit_report,
    evaluate_submission,
    frame_edge_masks,
    load_ground_truth,
    parse_report,
    rank,
)
from .formats import write_mask_png
from .synthetic import write_challenge


def _load_config(path: str | None) -> EvalConfig:
    if path is None:
        return EvalConfig()
    cfg = EvalConfig.from_dict(json.loads(Path(path).read_text()))
    validate_config(cfg)
    return cfg


def _dump_edge_masks(out_dir, manifest, submission, cfg, alignment) -> None:
    meta, predictions = submission
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for record in manifest:
        gt_raw = load_ground_truth(record, cfg)
        gt_edges, pred_edges = frame_edge_masks(
            predictions[record.frame_id], meta.prediction_kind, gt_raw, cfg, alignment)
        (out / f"{record.frame_id}.gt_edges.png").write_bytes(write_mask_png(gt_edges))
        (out / f"{record.frame_id}.pred_edges.png").write_bytes(write_mask_png(pred_edges))


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    manifest = load_manifest(args.manifest)
    submission = load_submission(args.submission, manifest)
    report = evaluate_submission(manifest, submission, cfg,
                                 alignment=args.align, workers=args.workers,
                                 pixel_pooled=args.pixel_pooled)
    if args.dump_edges:
        _dump_edge_masks(args.dump_edges, manifest, submission, cfg, args.align)
    payload = emit_report(report, args.format)
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
    overall = report.overall.means
    f = overall.get("f_score")
    print(f"evaluated {len(report.frame_order)} frames for team {report.team!r}; "
          f"overall F-Score: {f if f is None else f'{f:.4f}'}", file=sys.stderr)
    return 0


def _cmd_rank(args) -> int:
    entries = []
    for path in args.reports:
        report = parse_report(Path(path).read_bytes())
        entries.append((report.team, report))
    rows = rank(entries)
    payload = emit_leaderboard(rows, args.format)
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
    return 0


# gen-fixtures parameters: one table drives the flags and the --spec schema.
_GEN_DEFAULTS = {
    "frames": 8,
    "width": 64,
    "height": 48,
    "seed": 0,
    "pred_kind": "metric",
    "scale": 1.0,
    "shift": 0.0,
    "noise": 0.0,
    "team": "reference",
}


def _cmd_gen_fixtures(args) -> int:
    params = {key: getattr(args, key) for key in _GEN_DEFAULTS}
    if args.spec:
        # inline JSON object or a path to one; explicit flags take precedence
        text = args.spec
        if not text.lstrip().startswith("{"):
            text = Path(text).read_text()
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad gen-fixtures spec: {exc}") from None
        unknown = set(spec) - set(_GEN_DEFAULTS)
        if unknown:
            raise ParseError(f"unknown spec keys: {sorted(unknown)}")
        for key, value in spec.items():
            if params[key] == _GEN_DEFAULTS[key]:
                params[key] = value
    manifest_path, submission_dir = write_challenge(
        args.out,
        n_frames=int(params["frames"]),
        width=int(params["width"]),
        height=int(params["height"]),
        seed=int(params["seed"]),
        pred_kind=PredictionKind.parse(params["pred_kind"]),
        scale=float(params["scale"]),
        shift=float(params["shift"]),
        noise_sigma=float(params["noise"]),
        team=str(params["team"]),
    )
    print(f"manifest: {manifest_path}\nsubmission: {submission_dir}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import ChallengeService, ServerConfig, create_app

    config = ServerConfig.from_file(args.config)
    service = ChallengeService(config)
    service.start_worker()
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="depthbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="evaluate a submission against a manifest")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--submission", required=True,
                        help="submission directory or zip archive")
    p_eval.add_argument("--align", choices=ALIGNMENT_CHOICES, default="lse")
    p_eval.add_argument("--config", default=None, help="EvalConfig JSON file")
    p_eval.add_argument("--out", default=None, help="write the report here")
    p_eval.add_argument("--format", choices=("json", "csv", "markdown"), default="json")
    p_eval.add_argument("--workers", type=int, default=1)
    p_eval.add_argument("--pixel-pooled", action="store_true",
                        help="weight aggregate means by valid pixel count")
    p_eval.add_argument("--dump-edges", default=None, metavar="DIR",
                        help="also write per-frame edge masks as 1-bit PNGs")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_rank = sub.add_parser("rank", help="rank stored JSON reports into a leaderboard")
    p_rank.add_argument("reports", nargs="+")
    p_rank.add_argument("--format", choices=("markdown", "json", "csv"),
                        default="markdown")
    p_rank.add_argument("--out", default=None)
    p_rank.set_defaults(func=_cmd_rank)

    p_gen = sub.add_parser("gen-fixtures", help="emit a synthetic challenge dataset")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--spec", default=None,
                       help="JSON object (inline or a file path) with any of: "
                            + ", ".join(sorted(_GEN_DEFAULTS)))
    p_gen.add_argument("--frames", type=int, default=_GEN_DEFAULTS["frames"])
    p_gen.add_argument("--width", type=int, default=_GEN_DEFAULTS["width"])
    p_gen.add_argument("--height", type=int, default=_GEN_DEFAULTS["height"])
    p_gen.add_argument("--seed", type=int, default=_GEN_DEFAULTS["seed"])
    p_gen.add_argument("--pred-kind", dest="pred_kind",
                       default=_GEN_DEFAULTS["pred_kind"],
                       choices=[k.value for k in PredictionKind])
    p_gen.add_argument("--scale", type=float, default=_GEN_DEFAULTS["scale"])
    p_gen.add_argument("--shift", type=float, default=_GEN_DEFAULTS["shift"])
    p_gen.add_argument("--noise", type=float, default=_GEN_DEFAULTS["noise"])
    p_gen.add_argument("--team", default=_GEN_DEFAULTS["team"])
    p_gen.set_defaults(func=_cmd_gen_fixtures)

    p_serve = sub.add_parser("serve", help="run the phased submission service")
    p_serve.add_argument("--config", required=True, help="server config JSON")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DepthbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
