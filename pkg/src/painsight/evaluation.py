"""Leave-one-person-out folds, ranking metrics and report assembly.

Metrics are pooled by concatenating every fold's test predictions into
one score vector (a single ROC over all frames), not by averaging
per-fold curves.  Per-participant entries are additionally reported and
are undefined (rendered as ``--``) for participants whose retained
frames are single-class; their frames still count toward the pooled
numbers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .datamodel import DatasetManifest, DatasetTag
from .errors import MissingFoldError, TooFewParticipantsError
from .labels import PainLabel
from .smoothing import ScoreSeries


@dataclass(frozen=True)
class Fold:
    """One cross-validation fold: a held-out participant and its train side."""

    test_participant: str
    train_participants: tuple[str, ...]
    auxiliary_train_sources: tuple[DatasetTag, ...] = ()

    def __post_init__(self) -> None:
        if self.test_participant in self.train_participants:
            raise ValueError("test participant cannot appear in its own train side")


def make_lopo_folds(
    manifest: DatasetManifest,
    aux_sources: Sequence[DatasetTag] = (),
    include_primary_train: bool = True,
) -> list[Fold]:
    """One fold per primary participant, leave-one-person-out.

    Auxiliary dataset tags join every fold's training side and never its
    test side.  With include_primary_train=False (training uses only the
    external dataset) a pseudo-fold per test participant carries an empty
    primary training set.
    """
    ids = sorted(manifest.participant_ids())
    if len(ids) < 2:
        raise TooFewParticipantsError(
            f"need >= 2 primary participants, got {len(ids)}"
        )
    aux = tuple(aux_sources)
    if not include_primary_train and not aux:
        raise ValueError("external-only folds need at least one auxiliary source")
    folds = []
    for pid in ids:
        train = tuple(p for p in ids if p != pid) if include_primary_train else ()
        folds.append(Fold(pid, train, aux))
    return folds


def _binary_arrays(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    keep = y != int(PainLabel.EXCLUDED)
    return s[keep], (y[keep] == int(PainLabel.PAIN)).astype(np.int64)


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged, computed exactly."""
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def compute_roc_auc(scores, labels) -> float | None:
    """P(score_pos > score_neg) + 0.5 * P(tie); None when single-class.

    Equals the Mann-Whitney statistic via tie-averaged ranks, so the
    value is exact up to float rounding and invariant under any strictly
    increasing transform of the scores.
    """
    s, y = _binary_arrays(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _average_ranks(s)
    rank_sum = ranks[y == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def compute_average_precision(scores, labels) -> float | None:
    """Step-interpolated area under precision-recall; None when no positives.

    Equal scores collapse into one threshold, which makes tie handling
    deterministic: AP = sum over thresholds of (R_k - R_{k-1}) * P_k.
    """
    s, y = _binary_arrays(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        return None
    order = np.argsort(-s, kind="mergesort")
    s_desc, y_desc = s[order], y[order]
    # last row of each equal-score run, descending
    boundary = np.nonzero(np.diff(s_desc))[0]
    cut = np.concatenate([boundary, [len(s_desc) - 1]])
    tp = np.cumsum(y_desc)[cut].astype(np.float64)
    count = (cut + 1).astype(np.float64)
    precision = tp / count
    recall = tp / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(((recall - prev_recall) * precision).sum())


@dataclass(frozen=True)
class ParticipantMetrics:
    auc: float | None
    ap: float | None
    n_frames: int
    pain_pct: float


@dataclass
class MetricReport:
    """Per-participant and pooled test metrics for one experiment."""

    experiment_id: str
    smoothed: bool
    per_participant: dict[str, ParticipantMetrics] = field(default_factory=dict)
    pooled_auc: float | None = None
    pooled_ap: float | None = None
    n_frames: int = 0
    pain_pct: float = 0.0


def _metrics_for(scores: np.ndarray, labels: np.ndarray) -> ParticipantMetrics:
    _, y = _binary_arrays(scores, labels)
    n = len(y)
    pain_pct = 100.0 * y.sum() / n if n else 0.0
    return ParticipantMetrics(
        auc=compute_roc_auc(scores, labels),
        ap=compute_average_precision(scores, labels),
        n_frames=n,
        pain_pct=float(pain_pct),
    )


def pooled_report(
    scored_folds: Sequence[tuple[Fold, ScoreSeries]],
    experiment_id: str = "",
    smoothed: bool = False,
) -> MetricReport:
    """Assemble per-participant and pooled metrics from scored folds.

    Single-class participants get undefined per-participant entries but
    their frames still enter the pooled concatenation.
    """
    report = MetricReport(experiment_id=experiment_id, smoothed=smoothed)
    all_scores: list[np.ndarray] = []
    all_labels: list[np.ndarray] = []
    for fold, series in sorted(scored_folds, key=lambda fs: fs[0].test_participant):
        if series is None or series.participant_id != fold.test_participant:
            raise MissingFoldError(
                f"no score series for test participant {fold.test_participant}"
            )
        keep = series.labels != int(PainLabel.EXCLUDED)
        scores, labels = series.scores[keep], series.labels[keep]
        report.per_participant[fold.test_participant] = _metrics_for(scores, labels)
        all_scores.append(scores)
        all_labels.append(labels)
    pooled_scores = np.concatenate(all_scores) if all_scores else np.empty(0)
    pooled_labels = np.concatenate(all_labels) if all_labels else np.empty(0, dtype=np.int8)
    pooled = _metrics_for(pooled_scores, pooled_labels)
    report.pooled_auc = pooled.auc
    report.pooled_ap = pooled.ap
    report.n_frames = pooled.n_frames
    report.pain_pct = pooled.pain_pct
    return report


def _fmt(value: float | None, digits: int = 2) -> str:
    return "--" if value is None else f"{value:.{digits}f}"


def render_report_table(report: MetricReport) -> str:
    """Plain-text table: participant, AUC, AP, frame count and pain share."""
    lines = [
        f"experiment: {report.experiment_id}   smoothed: {str(report.smoothed).lower()}",
        f"{'Participant':<14}{'AUC':>8}{'AP':>8}  {'Frames (% Pain)':>20}",
    ]
    for pid in sorted(report.per_participant):
        m = report.per_participant[pid]
        lines.append(
            f"{pid:<14}{_fmt(m.auc):>8}{_fmt(m.ap):>8}  "
            f"{m.n_frames:>12,} ({m.pain_pct:.2f})"
        )
    lines.append(
        f"{'Total':<14}{_fmt(report.pooled_auc):>8}{_fmt(report.pooled_ap):>8}  "
        f"{report.n_frames:>12,} ({report.pain_pct:.2f})"
    )
    return "\n".join(lines) + "\n"


def report_to_json(report: MetricReport) -> str:
    """Deterministic machine-readable form (sorted keys, full precision)."""
    payload = {
        "experiment_id": report.experiment_id,
        "smoothed": report.smoothed,
        "pooled": {
            "auc": report.pooled_auc,
            "ap": report.pooled_ap,
            "n_frames": report.n_frames,
            "pain_pct": report.pain_pct,
        },
        "per_participant": {
            pid: {
                "auc": m.auc,
                "ap": m.ap,
                "n_frames": m.n_frames,
                "pain_pct": m.pain_pct,
            }
            for pid, m in report.per_participant.items()
        },
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def report_from_json(text: str) -> MetricReport:
    payload = json.loads(text)
    report = MetricReport(
        experiment_id=payload["experiment_id"],
        smoothed=payload["smoothed"],
        pooled_auc=payload["pooled"]["auc"],
        pooled_ap=payload["pooled"]["ap"],
        n_frames=payload["pooled"]["n_frames"],
        pain_pct=payload["pooled"]["pain_pct"],
    )
    for pid, m in payload["per_participant"].items():
        report.per_participant[pid] = ParticipantMetrics(
            auc=m["auc"], ap=m["ap"], n_frames=m["n_frames"], pain_pct=m["pain_pct"]
        )
    return report
