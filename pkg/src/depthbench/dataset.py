"""Dataset manifests and submission archives.

A manifest is a JSON document listing every frame to evaluate; a submission
is a directory or zip holding ``submission.json`` plus one PFM prediction per
frame, named ``{frame_id}.pfm``.  Both layouts are identical so a directory
can be zipped as-is.
"""

from __future__ import annotations

import io
import json
import warnings
import zipfile
from dataclasses import dataclass
from pathlib import Path

from .core import CameraIntrinsics, DepthRaster, PredictionKind
from .errors import (
    BadArchive,
    BadMeta,
    DuplicateFrameId,
    MissingField,
    MissingFrame,
    ParseError,
)
from .formats import read_pfm, write_pfm

ALIGNMENT_CHOICES = ("lse", "lse_robust", "median")


class UnknownExtraFileWarning(UserWarning):
    """Archive contains a file the manifest does not ask for (not fatal)."""


@dataclass(frozen=True)
class FrameRecord:
    frame_id: str
    category: str
    gt_path: Path
    intrinsics: CameraIntrinsics
    width: int
    height: int


@dataclass(frozen=True)
class SubmissionMeta:
    """Contents of submission.json.

    ``alignment`` lets a participant request median scaling instead of the
    default least-squares fit; absent means "server default".
    """

    team: str
    prediction_kind: PredictionKind
    notes: str | None = None
    alignment: str | None = None

    def to_dict(self) -> dict:
        out = {"team": self.team, "prediction_kind": self.prediction_kind.value}
        if self.notes is not None:
            out["notes"] = self.notes
        if self.alignment is not None:
            out["alignment"] = self.alignment
        return out


def _require(entry: dict, key: str, where: str):
    if key not in entry:
        raise MissingField(f"{where}.{key}")
    return entry[key]


def load_manifest(path) -> list[FrameRecord]:
    """Parse a manifest file into frame records, preserving file order."""
    path = Path(path)
    text = path.read_text()  # OSError propagates: missing files are I/O errors
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"cannot parse manifest {path}: {exc}") from None
    if not isinstance(doc, dict) or "frames" not in doc:
        raise MissingField("frames")
    records: list[FrameRecord] = []
    seen: set[str] = set()
    for i, entry in enumerate(doc["frames"]):
        where = f"frames[{i}]"
        frame_id = str(_require(entry, "frame_id", where))
        if frame_id in seen:
            raise DuplicateFrameId(f"frame_id {frame_id!r} appears more than once")
        seen.add(frame_id)
        category = str(_require(entry, "category", where))
        if not category:
            raise ParseError(f"{where}.category must be non-empty")
        gt = _require(entry, "gt", where)
        intr = _require(entry, "intrinsics", where)
        for k in ("fx", "fy", "cx", "cy"):
            _require(intr, k, f"{where}.intrinsics")
        width = int(_require(entry, "width", where))
        height = int(_require(entry, "height", where))
        intrinsics = CameraIntrinsics(
            fx=float(intr["fx"]), fy=float(intr["fy"]),
            cx=float(intr["cx"]), cy=float(intr["cy"]),
        )
        if not (0 <= intrinsics.cx <= width and 0 <= intrinsics.cy <= height):
            raise ParseError(f"{where}: principal point outside the {width}x{height} image")
        records.append(FrameRecord(
            frame_id=frame_id,
            category=category,
            gt_path=(path.parent / gt).resolve(),
            intrinsics=intrinsics,
            width=width,
            height=height,
        ))
    return records


def parse_submission_meta(data) -> SubmissionMeta:
    """Validate a submission.json document (bytes or parsed dict)."""
    if isinstance(data, (bytes, str)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise BadMeta(f"submission.json is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise BadMeta("submission.json must be a JSON object")
    team = data.get("team")
    if not isinstance(team, str) or not team:
        raise BadMeta("submission.json needs a non-empty 'team'")
    try:
        kind = PredictionKind.parse(str(data.get("prediction_kind")))
    except ValueError as exc:
        raise BadMeta(str(exc)) from None
    notes = data.get("notes")
    if notes is not None and not isinstance(notes, str):
        raise BadMeta("'notes' must be a string when present")
    alignment = data.get("alignment")
    if alignment is not None and alignment not in ALIGNMENT_CHOICES:
        raise BadMeta(f"'alignment' must be one of {ALIGNMENT_CHOICES}")
    return SubmissionMeta(team=team, prediction_kind=kind, notes=notes, alignment=alignment)


def _read_archive_files(source) -> dict[str, bytes]:
    """Flatten a directory or zip into {name: bytes} for its top-level files."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if path.is_dir():
            return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.is_file()}
        if path.is_file():
            source = path.read_bytes()
        else:
            raise BadArchive(f"{path} is neither a directory nor a file")
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    try:
        with zipfile.ZipFile(source) as zf:
            return {
                Path(info.filename).name: zf.read(info.filename)
                for info in zf.infolist()
                if not info.is_dir()
            }
    except zipfile.BadZipFile as exc:
        raise BadArchive(f"not a zip archive: {exc}") from None


def load_submission(source, manifest: list[FrameRecord]) -> tuple[SubmissionMeta, dict[str, DepthRaster]]:
    """Load a submission (directory, zip path, or zip bytes) against a manifest.

    Every manifest frame must have a prediction; resolution may differ from
    the target frame (resampling happens later in the pipeline).  Files that
    match no frame trigger an :class:`UnknownExtraFileWarning` only.
    """
    files = _read_archive_files(source)
    if "submission.json" not in files:
        raise BadMeta("archive has no submission.json")
    meta = parse_submission_meta(files["submission.json"])
    expected = {f"{rec.frame_id}.pfm" for rec in manifest}
    for name in files:
        if name != "submission.json" and name not in expected:
            warnings.warn(f"ignoring unexpected file {name!r}", UnknownExtraFileWarning,
                          stacklevel=2)
    predictions: dict[str, DepthRaster] = {}
    for rec in manifest:
        name = f"{rec.frame_id}.pfm"
        if name not in files:
            raise MissingFrame(rec.frame_id)
        predictions[rec.frame_id] = read_pfm(files[name])
    return meta, predictions


def write_submission(dest, meta: SubmissionMeta, predictions: dict[str, DepthRaster]) -> Path:
    """Write a submission; ``dest`` ending in .zip produces an archive, else a directory."""
    dest = Path(dest)
    blobs = {"submission.json": json.dumps(meta.to_dict(), indent=2).encode()}
    for frame_id, raster in predictions.items():
        blobs[f"{frame_id}.pfm"] = write_pfm(raster)
    if dest.suffix == ".zip":
        dest.parent.mkdir(parents=True, exist_ok=True)
        with zipfile.ZipFile(dest, "w", compression=zipfile.ZIP_DEFLATED) as zf:
            for name, blob in blobs.items():
                zf.writestr(name, blob)
    else:
        dest.mkdir(parents=True, exist_ok=True)
        for name, blob in blobs.items():
            (dest / name).write_bytes(blob)
    return dest
