"""Causal temporal smoothing of per-frame classifier scores.

Pain expressions change far slower than the frame rate, so per-frame
scores can be averaged over the trailing second to suppress jitter.  A
causal (trailing) window is mandatory for live dose titration: the
default config picks one second of frames, i.e. 30 frames at 30 fps and
60 at 60 fps.  The window includes the current frame, so W=1 is the
identity; at the stream start it shrinks rather than zero-padding, which
would bias early scores toward no-pain.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EmptySeriesError, RangeError
from .labels import PainLabel


class SmoothingMode(str, Enum):
    CAUSAL_UNIFORM = "causal_uniform"


@dataclass(frozen=True)
class SmoothingConfig:
    window_seconds: float = 1.0
    mode: SmoothingMode = SmoothingMode.CAUSAL_UNIFORM

    def __post_init__(self) -> None:
        if self.window_seconds <= 0:
            raise RangeError("window_seconds must be positive")


@dataclass(frozen=True)
class ScoreSeries:
    """Time-ordered per-frame scores for one participant.

    Excluded frames are dropped before scoring, so the retained sequence
    may skip frame indices; smoothing runs over this retained sequence.
    """

    participant_id: str
    fps: int
    frame_index: np.ndarray   # int64, strictly increasing
    timestamp_ms: np.ndarray  # float64
    scores: np.ndarray        # float64, finite
    labels: np.ndarray        # int8 PainLabel codes

    def __post_init__(self) -> None:
        n = len(self.frame_index)
        if not (len(self.timestamp_ms) == len(self.scores) == len(self.labels) == n):
            raise ValueError("series columns must have equal length")
        if n and np.any(np.diff(self.frame_index) <= 0):
            raise ValueError("frame_index must be strictly increasing")
        if n and not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")

    def __len__(self) -> int:
        return len(self.frame_index)

    @classmethod
    def build(cls, participant_id: str, fps: int, frame_index, timestamp_ms,
              scores, labels) -> "ScoreSeries":
        return cls(
            participant_id=participant_id,
            fps=fps,
            frame_index=np.asarray(frame_index, dtype=np.int64),
            timestamp_ms=np.asarray(timestamp_ms, dtype=np.float64),
            scores=np.asarray(scores, dtype=np.float64),
            labels=np.asarray(labels, dtype=np.int8),
        )


def select_window(fps: int, cfg: SmoothingConfig = SmoothingConfig()) -> int:
    """Window length in frames: one config-second of video, at least 1."""
    if fps < 1:
        raise RangeError("fps must be >= 1")
    return max(1, int(np.floor(fps * cfg.window_seconds + 0.5)))


def smooth_causal_uniform(series: ScoreSeries, window: int) -> ScoreSeries:
    """Trailing uniform mean over the last `window` retained frames.

    output[t] = mean(scores[max(0, t-window+1) .. t]); labels and
    timestamps pass through unchanged.
    """
    if window < 1:
        raise RangeError("window must be >= 1")
    n = len(series)
    if n == 0:
        raise EmptySeriesError(f"{series.participant_id}: empty score series")
    x = series.scores
    if window == 1 or n == 1:
        return replace(series, scores=x.copy())
    out = np.empty(n, dtype=np.float64)
    head = min(window, n)
    out[:head] = np.cumsum(x[:head]) / np.arange(1, head + 1)
    if n >= window:
        out[window - 1:] = sliding_window_view(x, window).mean(axis=1)
    return replace(series, scores=out)


def write_score_file(path: str | Path, series: ScoreSeries, *,
                     smoothed: bool, window: int = 0) -> Path:
    """Score file: a `# smoothed=... window=...` flag line, then CSV rows
    participant_id, frame_index, timestamp_ms, score, label."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# smoothed={'true' if smoothed else 'false'} window={window}\n")
        writer = csv.writer(fh)
        writer.writerow(["participant_id", "frame_index", "timestamp_ms", "score", "label"])
        for i in range(len(series)):
            writer.writerow([
                series.participant_id,
                int(series.frame_index[i]),
                repr(float(series.timestamp_ms[i])),
                repr(float(series.scores[i])),
                PainLabel(int(series.labels[i])).to_str(),
            ])
    return path


def read_score_file(path: str | Path) -> tuple[ScoreSeries, bool, int]:
    """Inverse of write_score_file; fps is recovered from frame spacing
    when possible (single-frame files report fps=1)."""
    path = Path(path)
    with path.open(newline="") as fh:
        flag = fh.readline().strip()
        parts = dict(token.split("=") for token in flag.lstrip("# ").split())
        smoothed = parts.get("smoothed") == "true"
        window = int(parts.get("window", 0))
        reader = csv.DictReader(fh)
        pid = ""
        idx: list[int] = []
        ts: list[float] = []
        sc: list[float] = []
        lb: list[int] = []
        for row in reader:
            pid = row["participant_id"]
            idx.append(int(row["frame_index"]))
            ts.append(float(row["timestamp_ms"]))
            sc.append(float(row["score"]))
            lb.append(int(PainLabel.from_str(row["label"])))
    fps = 1
    if len(idx) >= 2:
        dt = (ts[1] - ts[0]) / (idx[1] - idx[0])
        fps = max(1, int(round(1000.0 / dt))) if dt > 0 else 1
    series = ScoreSeries.build(pid, fps, idx, ts, sc, lb)
    return series, smoothed, window
