"""End to end: synthesize a challenge, evaluate two submissions, rank them.

The same flow is available from the command line:

    depthbench gen-fixtures --out data --frames 8
    depthbench evaluate --manifest data/manifest.json --submission data/submission --out r.json
    depthbench rank r1.json r2.json --format markdown
"""

import tempfile
from pathlib import Path

from depthbench import (
    EvalConfig,
    PredictionKind,
    emit_leaderboard,
    evaluate_submission,
    load_manifest,
    load_submission,
    rank,
    synth_prediction,
    write_challenge,
)
from depthbench.dataset import SubmissionMeta
from depthbench.evaluation import load_ground_truth

cfg = EvalConfig()

with tempfile.TemporaryDirectory() as tmp:
    manifest_path, submission_dir = write_challenge(
        Path(tmp), n_frames=8, width=64, height=48, seed=5)
    manifest = load_manifest(manifest_path)
    print(f"challenge: {len(manifest)} frames, categories "
          f"{sorted({r.category for r in manifest})}")

    # Submission 1: the reference (noise-free) predictions written to disk.
    reference = load_submission(submission_dir, manifest)
    report_ref = evaluate_submission(manifest, reference, cfg)

    # Submission 2: a sloppier affine-invariant entry, built in memory.
    meta = SubmissionMeta("noisy-affine", PredictionKind.AFFINE_INVARIANT)
    preds = {}
    for i, rec in enumerate(manifest):
        gt = load_ground_truth(rec, cfg)
        preds[rec.frame_id] = synth_prediction(
            gt, PredictionKind.AFFINE_INVARIANT, s=0.04, t=1.5,
            noise_sigma=0.06, seed=i)
    report_noisy = evaluate_submission(manifest, (meta, preds), cfg)

    for rep in (report_ref, report_noisy):
        o = rep.overall.means
        print(f"\n{rep.team}: F={o['f_score']:.3f} MAE={o['mae']:.3f} "
              f"AbsRel={o['absrel']:.4f} F-edges coverage "
              f"{rep.overall.coverage['f_edges']}/{len(rep.frame_order)} frames")

    rows = rank([(report_ref.team, report_ref), (report_noisy.team, report_noisy)])
    print("\n" + emit_leaderboard(rows, "markdown").decode())
