"""Figure emitters: pooled ROC curves and per-participant timelines."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import MisalignedSeriesError, SingleClassError
from .evaluation import compute_roc_auc
from .labels import PainLabel
from .smoothing import ScoreSeries

_NO_PAIN_COLOR = "#3465a4"
_PAIN_COLOR = "#cc0000"


def roc_curve_points(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """(fpr, tpr) arrays swept over descending score thresholds, with
    equal scores grouped into one threshold."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    keep = y != int(PainLabel.EXCLUDED)
    s, y = s[keep], (y[keep] == int(PainLabel.PAIN)).astype(np.int64)
    n_pos, n_neg = int(y.sum()), int((1 - y).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("ROC needs both classes")
    order = np.argsort(-s, kind="mergesort")
    y_desc = y[order]
    boundary = np.nonzero(np.diff(s[order]))[0]
    cut = np.concatenate([boundary, [len(y_desc) - 1]])
    tp = np.cumsum(y_desc)[cut]
    fp = (cut + 1) - tp
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    return fpr, tpr


def emit_roc_plot(scores, labels, out_path: str | Path, title: str = "") -> Path:
    """One pooled ROC curve, axes 0-1, AUC in the legend."""
    fpr, tpr = roc_curve_points(scores, labels)
    auc = compute_roc_auc(scores, labels)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(fpr, tpr, color=_PAIN_COLOR, label=f"AUC = {auc:.2f}")
    ax.plot([0, 1], [0, 1], linestyle="--", color="gray", linewidth=0.8)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=100)
    plt.close(fig)
    return out_path


def timeline_figure(
    participant_id: str,
    truth_labels: np.ndarray,
    series_by_model: dict[str, ScoreSeries],
):
    """Stacked rows: ground-truth band on top, one score trace per model.

    All series must align on frame index with each other and with the
    truth vector."""
    if not series_by_model:
        raise MisalignedSeriesError("need at least one score series")
    reference = next(iter(series_by_model.values())).frame_index
    truth = np.asarray(truth_labels)
    if len(truth) != len(reference):
        raise MisalignedSeriesError("truth labels do not align with the series")
    for name, series in series_by_model.items():
        if len(series.frame_index) != len(reference) or np.any(
            series.frame_index != reference
        ):
            raise MisalignedSeriesError(f"series {name!r} misaligned on frame index")

    n_rows = 1 + len(series_by_model)
    fig, axes = plt.subplots(
        n_rows, 1, figsize=(9, 1.2 * n_rows), sharex=True, squeeze=False
    )
    axes = axes[:, 0]

    band = np.zeros((1, len(truth), 3))
    band[0, truth == int(PainLabel.NO_PAIN)] = matplotlib.colors.to_rgb(_NO_PAIN_COLOR)
    band[0, truth == int(PainLabel.PAIN)] = matplotlib.colors.to_rgb(_PAIN_COLOR)
    axes[0].imshow(
        band,
        aspect="auto",
        interpolation="nearest",
        extent=(reference[0], reference[-1] if len(reference) > 1 else reference[0] + 1, 0, 1),
    )
    axes[0].set_yticks([])
    axes[0].set_ylabel("truth", rotation=0, ha="right", va="center")
    axes[0].set_title(participant_id)

    for ax, (name, series) in zip(axes[1:], series_by_model.items()):
        ax.plot(series.frame_index, series.scores, color="black", linewidth=0.7)
        ax.set_ylabel(name, rotation=0, ha="right", va="center")
        ax.set_ylim(min(0.0, series.scores.min()), max(1.0, series.scores.max()))
    axes[-1].set_xlabel("frame")
    fig.tight_layout()
    return fig


def emit_timeline_plot(
    participant_id: str,
    truth_labels: np.ndarray,
    series_by_model: dict[str, ScoreSeries],
    out_path: str | Path,
) -> Path:
    fig = timeline_figure(participant_id, truth_labels, series_by_model)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=100)
    plt.close(fig)
    return out_path
