import json

import numpy as np
import pytest

from depthbench import DepthRaster, PredictionKind, load_manifest, load_submission, write_submission
from depthbench.dataset import SubmissionMeta, UnknownExtraFileWarning, parse_submission_meta
from depthbench.errors import BadArchive, BadMeta, DuplicateFrameId, MissingField, MissingFrame, ParseError


def manifest_doc(frames):
    return {"frames": frames}


def frame_entry(fid, category="urban", w=8, h=6):
    return {
        "frame_id": fid,
        "category": category,
        "gt": f"gt/{fid}.png",
        "intrinsics": {"fx": 6.4, "fy": 6.4, "cx": w / 2, "cy": h / 2},
        "width": w,
        "height": h,
    }


class TestManifest:
    def test_order_preserved(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(manifest_doc([frame_entry("b"), frame_entry("a")])))
        records = load_manifest(path)
        assert [r.frame_id for r in records] == ["b", "a"]
        assert records[0].gt_path == (tmp_path / "gt/b.png").resolve()

    def test_duplicate_frame_id(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(manifest_doc([frame_entry("0001"), frame_entry("0001")])))
        with pytest.raises(DuplicateFrameId):
            load_manifest(path)

    def test_missing_intrinsics_field(self, tmp_path):
        entry = frame_entry("x")
        del entry["intrinsics"]["fy"]
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(manifest_doc([entry])))
        with pytest.raises(MissingField) as err:
            load_manifest(path)
        assert "fy" in str(err.value)

    def test_not_json(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text("{nope")
        with pytest.raises(ParseError):
            load_manifest(path)

    def test_principal_point_must_be_inside(self, tmp_path):
        entry = frame_entry("x")
        entry["intrinsics"]["cx"] = 99.0
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(manifest_doc([entry])))
        with pytest.raises(ParseError):
            load_manifest(path)


class TestSubmissionMeta:
    def test_parse(self):
        meta = parse_submission_meta(b'{"team": "t", "prediction_kind": "disparity"}')
        assert meta.team == "t"
        assert meta.prediction_kind is PredictionKind.DISPARITY
        assert meta.alignment is None

    def test_alignment_request(self):
        meta = parse_submission_meta(
            b'{"team": "t", "prediction_kind": "metric", "alignment": "median"}')
        assert meta.alignment == "median"

    @pytest.mark.parametrize("doc", [
        b"not json",
        b'{"prediction_kind": "metric"}',
        b'{"team": "", "prediction_kind": "metric"}',
        b'{"team": "t", "prediction_kind": "inverse"}',
        b'{"team": "t", "prediction_kind": "metric", "alignment": "ransac"}',
    ])
    def test_rejects(self, doc):
        with pytest.raises(BadMeta):
            parse_submission_meta(doc)


def tiny_manifest(tmp_path, ids=("0000", "0001")):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest_doc([frame_entry(i) for i in ids])))
    return load_manifest(path)


def tiny_predictions(rng, ids, h=6, w=8):
    return {fid: DepthRaster(rng.uniform(1, 5, (h, w)).astype(np.float32)) for fid in ids}


class TestSubmissionArchive:
    def test_directory_round_trip(self, tmp_path, rng):
        manifest = tiny_manifest(tmp_path)
        meta = SubmissionMeta("crew", PredictionKind.METRIC, notes="v1")
        preds = tiny_predictions(rng, ["0000", "0001"])
        write_submission(tmp_path / "sub", meta, preds)
        meta2, preds2 = load_submission(tmp_path / "sub", manifest)
        assert meta2 == meta
        for fid in preds:
            assert np.array_equal(preds2[fid].values, preds[fid].values)

    def test_zip_equals_directory(self, tmp_path, rng):
        manifest = tiny_manifest(tmp_path)
        meta = SubmissionMeta("crew", PredictionKind.METRIC)
        preds = tiny_predictions(rng, ["0000", "0001"])
        write_submission(tmp_path / "sub", meta, preds)
        write_submission(tmp_path / "sub.zip", meta, preds)
        _, from_dir = load_submission(tmp_path / "sub", manifest)
        _, from_zip = load_submission(tmp_path / "sub.zip", manifest)
        for fid in from_dir:
            assert np.array_equal(from_dir[fid].values, from_zip[fid].values)

    def test_zip_bytes_accepted(self, tmp_path, rng):
        manifest = tiny_manifest(tmp_path)
        meta = SubmissionMeta("crew", PredictionKind.METRIC)
        write_submission(tmp_path / "sub.zip", meta, tiny_predictions(rng, ["0000", "0001"]))
        blob = (tmp_path / "sub.zip").read_bytes()
        meta2, preds = load_submission(blob, manifest)
        assert set(preds) == {"0000", "0001"}

    def test_missing_frame(self, tmp_path, rng):
        manifest = tiny_manifest(tmp_path, ids=("0000", "0007"))
        meta = SubmissionMeta("crew", PredictionKind.METRIC)
        write_submission(tmp_path / "sub", meta, tiny_predictions(rng, ["0000"]))
        with pytest.raises(MissingFrame) as err:
            load_submission(tmp_path / "sub", manifest)
        assert err.value.frame_id == "0007"

    def test_extra_file_warns_but_loads(self, tmp_path, rng):
        manifest = tiny_manifest(tmp_path)
        meta = SubmissionMeta("crew", PredictionKind.METRIC)
        write_submission(tmp_path / "sub", meta, tiny_predictions(rng, ["0000", "0001"]))
        (tmp_path / "sub" / "stray.txt").write_text("hello")
        with pytest.warns(UnknownExtraFileWarning):
            _, preds = load_submission(tmp_path / "sub", manifest)
        assert set(preds) == {"0000", "0001"}

    def test_half_resolution_accepted_unchanged(self, tmp_path, rng):
        manifest = tiny_manifest(tmp_path, ids=("0000",))
        meta = SubmissionMeta("crew", PredictionKind.METRIC)
        half = tiny_predictions(rng, ["0000"], h=3, w=4)
        write_submission(tmp_path / "sub", meta, half)
        _, preds = load_submission(tmp_path / "sub", manifest)
        assert preds["0000"].shape == (3, 4)

    def test_missing_meta(self, tmp_path, rng):
        manifest = tiny_manifest(tmp_path)
        meta = SubmissionMeta("crew", PredictionKind.METRIC)
        write_submission(tmp_path / "sub", meta, tiny_predictions(rng, ["0000", "0001"]))
        (tmp_path / "sub" / "submission.json").unlink()
        with pytest.raises(BadMeta):
            load_submission(tmp_path / "sub", manifest)

    def test_not_an_archive(self, tmp_path):
        manifest = tiny_manifest(tmp_path)
        target = tmp_path / "garbage.zip"
        target.write_bytes(b"pk-nope")
        with pytest.raises(BadArchive):
            load_submission(target, manifest)
