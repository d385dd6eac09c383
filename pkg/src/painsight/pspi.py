"""Prkachin-Solomon pain intensity scoring from FACS action units.

The score sums the pain-related action units:

    AU4 + max(AU6, AU7) + max(AU9, AU10) + AU43

with AU4/6/7/9/10 on the ordinal 0-5 intensity scale and AU43 (eyes
closed) binary, giving a 0-16 range.  Binarization follows the
thresholds used for training labels: 0 is no-pain, 4+ is pain, 1-3 is
excluded from training.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

from .errors import RangeError
from .labels import PainLabel

AU_COLUMNS = ("au4", "au6", "au7", "au9", "au10", "au43")


@dataclass(frozen=True)
class ActionUnitVector:
    """Intensities of the action units entering the pain score."""

    au4: int = 0   # brow lowerer
    au6: int = 0   # cheek raiser
    au7: int = 0   # lid tightener
    au9: int = 0   # nose wrinkler
    au10: int = 0  # upper lip raiser
    au43: int = 0  # eyes closed (binary)

    def __post_init__(self) -> None:
        for name in ("au4", "au6", "au7", "au9", "au10"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v <= 5:
                raise RangeError(f"{name}={v!r} outside the 0-5 intensity range")
        if self.au43 not in (0, 1):
            raise RangeError(f"au43={self.au43!r} must be binary")


@dataclass(frozen=True)
class BinarizationPolicy:
    """Score thresholds mapping a pain score to a training label."""

    no_pain_max: int = 0
    pain_min: int = 4

    def __post_init__(self) -> None:
        if not 0 <= self.no_pain_max < self.pain_min <= 16:
            raise RangeError(
                f"require 0 <= no_pain_max < pain_min <= 16, got "
                f"({self.no_pain_max}, {self.pain_min})"
            )


DEFAULT_POLICY = BinarizationPolicy()


def compute_pspi(aus: ActionUnitVector) -> int:
    """Pain intensity score in [0, 16] for one frame's action units."""
    return aus.au4 + max(aus.au6, aus.au7) + max(aus.au9, aus.au10) + aus.au43


def binarize_pspi(score: int, policy: BinarizationPolicy = DEFAULT_POLICY) -> PainLabel:
    """Map a pain score to a training label under the given thresholds.

    Scores above no_pain_max but below pain_min fall in the ambiguous
    band and are excluded rather than forced into either class.
    """
    if not 0 <= score <= 16:
        raise RangeError(f"score {score!r} outside the 0-16 range")
    if score <= policy.no_pain_max:
        return PainLabel.NO_PAIN
    if score >= policy.pain_min:
        return PainLabel.PAIN
    return PainLabel.EXCLUDED


def _coerce_intensity(raw: str, column: str, path: Path, warned: set[str]) -> int:
    value = float(raw)
    if value != int(value) and column not in warned:
        warned.add(column)
        warnings.warn(
            f"{path}: real-valued {column} intensities rounded to integers",
            stacklevel=3,
        )
    return int(round(value))


def read_au_file(path: str | Path) -> list[ActionUnitVector]:
    """Read per-frame action-unit rows.

    The file is a CSV with header ``frame_index,au4,au6,au7,au9,au10,au43``;
    rows must be sorted by frame index starting at 0.  Missing AU columns
    default to 0 with a warning.  Real-valued intensities are rounded.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in AU_COLUMNS if c not in header]
        if missing:
            warnings.warn(f"{path}: missing AU columns {missing} default to 0", stacklevel=2)
        warned: set[str] = set()
        rows: list[ActionUnitVector] = []
        for i, row in enumerate(reader):
            idx = int(row["frame_index"])
            if idx != i:
                raise RangeError(f"{path}: row {i} has frame_index {idx}; expected {i}")
            values = {
                c: _coerce_intensity(row[c], c, path, warned)
                for c in AU_COLUMNS
                if c in row and row[c] not in (None, "")
            }
            rows.append(ActionUnitVector(**values))
    return rows


def write_au_file(path: str | Path, rows: list[ActionUnitVector]) -> None:
    """Write per-frame action-unit rows in the documented CSV format."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("frame_index",) + AU_COLUMNS)
        for i, aus in enumerate(rows):
            writer.writerow([i] + [getattr(aus, c) for c in AU_COLUMNS])
