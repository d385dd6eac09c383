"""Shared data model: dataset manifests and per-frame label resolution.

A dataset is described by a manifest file in JSON-Lines form, one
participant object per line (diff-friendly and stream-parsable):

    {"id": "P003", "fps": 30, "dataset": "sedation",
     "frames_dir": "frames/P003",
     "landmarks": "landmarks/P003.csv", "landmark_schema": "sparse68",
     "label_intervals": [[0.0, 4000.0, "no_pain"], [4000.0, 6500.0, "pain"]],
     "exclusions": [[1200.0, 1500.0]],
     "au_file": null}

Paths are relative to the manifest's directory.  Frame images live in
``frames_dir`` as individual files named by zero-padded frame index
(``000042.png``).  A participant is labeled either by rater intervals
(sedation-style) or by a per-frame action-unit file (externally coded
data), never both.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    LabelSourceError,
    ManifestParseError,
    MissingFramesError,
    ValidationError,
)
from .labels import PainLabel
from .pspi import binarize_pspi, compute_pspi, read_au_file

EXPECTED_SEDATION_FPS = (30, 60)


class DatasetTag(str, Enum):
    SEDATION = "sedation"
    EXTERNAL_AU_CODED = "external_au_coded"


class LabelSourceKind(str, Enum):
    NURSE_INTERVAL = "nurse_interval"
    AU_CODED = "au_coded"


class LandmarkSchema(str, Enum):
    SPARSE_68 = "sparse68"
    DENSE_MESH = "dense_mesh"


@dataclass(frozen=True)
class LabelInterval:
    """Half-open rating interval [start_ms, end_ms) from the real-time rater."""

    start_ms: float
    end_ms: float
    rating: PainLabel

    def __post_init__(self) -> None:
        if self.start_ms < 0 or not self.end_ms > self.start_ms:
            raise ValidationError(
                f"bad interval [{self.start_ms}, {self.end_ms})"
            )
        if self.rating not in (PainLabel.NO_PAIN, PainLabel.PAIN):
            raise ValidationError("interval rating must be pain or no_pain")

    def contains(self, t_ms: float) -> bool:
        return self.start_ms <= t_ms < self.end_ms


@dataclass(frozen=True)
class ExclusionInterval:
    """Segment where the face was out of view; overlapping frames are excluded."""

    start_ms: float
    end_ms: float

    def __post_init__(self) -> None:
        if self.start_ms < 0 or not self.end_ms > self.start_ms:
            raise ValidationError(
                f"bad exclusion [{self.start_ms}, {self.end_ms})"
            )

    def contains(self, t_ms: float) -> bool:
        return self.start_ms <= t_ms < self.end_ms


@dataclass(frozen=True)
class ParticipantMeta:
    participant_id: str
    fps: int
    dataset_tag: DatasetTag


@dataclass(frozen=True)
class FrameRecord:
    """One video frame with resolved ground truth and artifact locators."""

    participant_id: str
    frame_index: int
    timestamp_ms: float
    label: PainLabel
    source: LabelSourceKind
    image_ref: Path
    landmark_ref: Path | None = None


@dataclass(frozen=True)
class Participant:
    """Manifest entry: metadata plus resolved locators and label sources."""

    meta: ParticipantMeta
    frames_dir: Path
    landmark_file: Path | None
    landmark_schema: LandmarkSchema | None
    label_intervals: tuple[LabelInterval, ...] = ()
    exclusions: tuple[ExclusionInterval, ...] = ()
    au_file: Path | None = None

    @property
    def participant_id(self) -> str:
        return self.meta.participant_id

    @property
    def fps(self) -> int:
        return self.meta.fps

    @property
    def label_source(self) -> LabelSourceKind:
        return (
            LabelSourceKind.AU_CODED
            if self.au_file is not None
            else LabelSourceKind.NURSE_INTERVAL
        )


@dataclass
class DatasetManifest:
    participants: list[Participant] = field(default_factory=list)

    def participant_ids(self) -> list[str]:
        return [p.participant_id for p in self.participants]

    def get(self, participant_id: str) -> Participant:
        for p in self.participants:
            if p.participant_id == participant_id:
                return p
        raise KeyError(participant_id)


def _validate_participant(p: Participant) -> None:
    if p.fps < 1:
        raise ValidationError(f"{p.participant_id}: fps must be positive")
    if p.meta.dataset_tag is DatasetTag.SEDATION and p.fps not in EXPECTED_SEDATION_FPS:
        warnings.warn(
            f"{p.participant_id}: unusual sedation fps {p.fps} "
            f"(expected one of {EXPECTED_SEDATION_FPS})",
            stacklevel=3,
        )

    has_intervals = len(p.label_intervals) > 0
    has_au = p.au_file is not None
    if has_intervals == has_au:
        raise ValidationError(
            f"{p.participant_id}: exactly one labeling source required "
            f"(rating intervals xor AU file)"
        )
    if has_intervals and p.meta.dataset_tag is not DatasetTag.SEDATION:
        raise ValidationError(
            f"{p.participant_id}: interval labels require the sedation tag"
        )
    if has_au and p.meta.dataset_tag is not DatasetTag.EXTERNAL_AU_CODED:
        raise ValidationError(
            f"{p.participant_id}: AU-file labels require the external tag"
        )

    intervals = sorted(p.label_intervals, key=lambda iv: iv.start_ms)
    for a, b in zip(intervals, intervals[1:]):
        if b.start_ms < a.end_ms:
            raise ValidationError(
                f"{p.participant_id}: overlapping label intervals "
                f"[{a.start_ms}, {a.end_ms}) and [{b.start_ms}, {b.end_ms})"
            )

    if not p.frames_dir.is_dir():
        raise ValidationError(f"{p.participant_id}: dangling frames_dir {p.frames_dir}")
    for locator in (p.landmark_file, p.au_file):
        if locator is not None and not locator.is_file():
            raise ValidationError(f"{p.participant_id}: dangling locator {locator}")


def validate_manifest(manifest: DatasetManifest) -> None:
    seen: set[str] = set()
    for p in manifest.participants:
        if p.participant_id in seen:
            raise ValidationError(f"duplicate participant id {p.participant_id}")
        seen.add(p.participant_id)
        _validate_participant(p)


def _participant_from_record(rec: dict, root: Path, lineno: int) -> Participant:
    try:
        meta = ParticipantMeta(
            participant_id=str(rec["id"]),
            fps=int(rec["fps"]),
            dataset_tag=DatasetTag(rec.get("dataset", "sedation")),
        )
        intervals = tuple(
            LabelInterval(float(s), float(e), PainLabel.from_str(r))
            for s, e, r in rec.get("label_intervals") or []
        )
        exclusions = tuple(
            ExclusionInterval(float(s), float(e))
            for s, e in rec.get("exclusions") or []
        )
        landmarks = rec.get("landmarks")
        schema = rec.get("landmark_schema")
        au_file = rec.get("au_file")
        return Participant(
            meta=meta,
            frames_dir=root / str(rec["frames_dir"]),
            landmark_file=root / str(landmarks) if landmarks else None,
            landmark_schema=LandmarkSchema(schema) if schema else None,
            label_intervals=intervals,
            exclusions=exclusions,
            au_file=root / str(au_file) if au_file else None,
        )
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestParseError(f"line {lineno}: {exc}") from exc


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a JSON-Lines dataset manifest.

    Raises ManifestParseError for malformed input and ValidationError
    when the parsed manifest breaks an invariant (overlapping intervals,
    dual labeling sources, dangling locators, duplicate ids).
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestParseError(f"no manifest at {path}")
    root = path.parent
    participants: list[Participant] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestParseError(f"{path}:{lineno}: {exc}") from exc
        if not isinstance(rec, dict):
            raise ManifestParseError(f"{path}:{lineno}: expected an object per line")
        participants.append(_participant_from_record(rec, root, lineno))
    manifest = DatasetManifest(participants)
    validate_manifest(manifest)
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    """Write a manifest back out, with locators relative to the file."""
    path = Path(path)
    root = path.parent
    lines = []
    for p in manifest.participants:
        rec = {
            "id": p.participant_id,
            "fps": p.fps,
            "dataset": p.meta.dataset_tag.value,
            "frames_dir": str(p.frames_dir.relative_to(root)),
            "landmarks": str(p.landmark_file.relative_to(root)) if p.landmark_file else None,
            "landmark_schema": p.landmark_schema.value if p.landmark_schema else None,
            "label_intervals": [
                [iv.start_ms, iv.end_ms, iv.rating.to_str()] for iv in p.label_intervals
            ],
            "exclusions": [[ex.start_ms, ex.end_ms] for ex in p.exclusions],
            "au_file": str(p.au_file.relative_to(root)) if p.au_file else None,
        }
        lines.append(json.dumps(rec, sort_keys=True))
    path.write_text("\n".join(lines) + "\n")
    return path


def list_frame_files(frames_dir: Path) -> list[Path]:
    """Frame image files sorted by their zero-padded index names."""
    files = sorted(
        f for f in frames_dir.iterdir()
        if f.is_file() and f.stem.isdigit() and f.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    return files


def frame_timestamps_ms(n_frames: int, fps: int) -> np.ndarray:
    return np.arange(n_frames, dtype=np.float64) * (1000.0 / fps)


def _interval_labels(
    timestamps: np.ndarray, intervals: tuple[LabelInterval, ...]
) -> np.ndarray:
    """Label per timestamp from half-open intervals; uncovered -> EXCLUDED."""
    labels = np.full(timestamps.shape, int(PainLabel.EXCLUDED), dtype=np.int8)
    ordered = sorted(intervals, key=lambda iv: iv.start_ms)
    starts = np.array([iv.start_ms for iv in ordered])
    # non-overlap was validated, so one searchsorted pass suffices
    pos = np.searchsorted(starts, timestamps, side="right") - 1
    for i, iv in enumerate(ordered):
        inside = (pos == i) & (timestamps < iv.end_ms)
        labels[inside] = int(iv.rating)
    return labels


def _apply_exclusions(
    labels: np.ndarray, timestamps: np.ndarray, exclusions: tuple[ExclusionInterval, ...]
) -> None:
    for ex in exclusions:
        hit = (timestamps >= ex.start_ms) & (timestamps < ex.end_ms)
        labels[hit] = int(PainLabel.EXCLUDED)


def resolve_frame_labels(
    manifest: DatasetManifest, participant_id: str
) -> list[FrameRecord]:
    """Assign exactly one label to every frame of one participant.

    Interval-labeled participants take the rating of the interval whose
    half-open span contains the frame timestamp; frames covered by no
    interval, or overlapping any exclusion segment, are EXCLUDED.
    AU-coded participants take the binarized pain score of their per-frame
    action units.  Pure function of (manifest, frame files on disk).
    """
    p = manifest.get(participant_id)
    frame_files = list_frame_files(p.frames_dir)
    n = len(frame_files)
    if n == 0:
        raise MissingFramesError(f"{participant_id}: no frames in {p.frames_dir}")
    timestamps = frame_timestamps_ms(n, p.fps)

    if p.label_source is LabelSourceKind.AU_CODED:
        assert p.au_file is not None
        aus = read_au_file(p.au_file)
        if len(aus) != n:
            raise LabelSourceError(
                f"{participant_id}: AU file has {len(aus)} rows for {n} frames"
            )
        labels = np.array(
            [int(binarize_pspi(compute_pspi(a))) for a in aus], dtype=np.int8
        )
        source = LabelSourceKind.AU_CODED
    else:
        labels = _interval_labels(timestamps, p.label_intervals)
        source = LabelSourceKind.NURSE_INTERVAL
    _apply_exclusions(labels, timestamps, p.exclusions)

    return [
        FrameRecord(
            participant_id=participant_id,
            frame_index=i,
            timestamp_ms=float(timestamps[i]),
            label=PainLabel(int(labels[i])),
            source=source,
            image_ref=frame_files[i],
            landmark_ref=p.landmark_file,
        )
        for i in range(n)
    ]
