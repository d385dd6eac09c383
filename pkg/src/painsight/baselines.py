"""HOG-feature baselines: linear max-margin and random-forest scorers.

The descriptor follows the canonical detector geometry (8-px cells, 2x2
blocks at stride 1, 9 unsigned orientation bins) over a grayscale crop.
Gradients come from central differences, so the descriptor is invariant
to global additive brightness shifts up to clipping; an epsilon-guarded
block normalization maps constant images to an all-zero descriptor.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import joblib
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.ensemble import RandomForestClassifier
from sklearn.svm import LinearSVC

from .errors import DegenerateLabelsError, DimensionError, NotFittedError

_NORM_EPS = 1e-6
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class BaselineKind(str, Enum):
    LINEAR_MARGIN = "linear_margin"
    FOREST = "forest"


@dataclass(frozen=True)
class HogParams:
    cell_size: int = 8        # pixels per cell side
    block_size: int = 2       # cells per block side
    block_stride: int = 1     # cells between block origins
    orientation_bins: int = 9
    signed: bool = False

    def __post_init__(self) -> None:
        if min(self.cell_size, self.block_size, self.block_stride) < 1:
            raise ValueError("HOG geometry fields must be positive")
        if self.orientation_bins < 2:
            raise ValueError("need at least 2 orientation bins")

    def descriptor_length(self, height: int, width: int) -> int:
        cy, cx = height // self.cell_size, width // self.cell_size
        nby = (cy - self.block_size) // self.block_stride + 1
        nbx = (cx - self.block_size) // self.block_stride + 1
        return nby * nbx * self.block_size**2 * self.orientation_bins


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """Luma-weighted grayscale as float64; passes 2-D images through."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    return arr @ _LUMA


def _gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # central differences with one-sided edges (brightness-shift invariant)
    gx = np.empty_like(gray)
    gy = np.empty_like(gray)
    gx[:, 1:-1] = gray[:, 2:] - gray[:, :-2]
    gx[:, 0] = gray[:, 1] - gray[:, 0]
    gx[:, -1] = gray[:, -1] - gray[:, -2]
    gy[1:-1, :] = gray[2:, :] - gray[:-2, :]
    gy[0, :] = gray[1, :] - gray[0, :]
    gy[-1, :] = gray[-1, :] - gray[-2, :]
    return gx, gy


def extract_hog(img: np.ndarray, params: HogParams = HogParams()) -> np.ndarray:
    """Block-normalized HOG descriptor of a grayscale (or RGB) image.

    Orientation binning is hard assignment over [0, 180) degrees (or
    [0, 360) when signed), weighted by gradient magnitude; each
    block_size x block_size cell group is L2-normalized independently.
    """
    gray = to_grayscale(img)
    h, w = gray.shape
    cs = params.cell_size
    if h % cs or w % cs:
        raise DimensionError(f"image {h}x{w} not divisible by cell_size {cs}")
    cy, cx = h // cs, w // cs
    if cy < params.block_size or cx < params.block_size:
        raise DimensionError("fewer cells than block_size")

    gx, gy = _gradients(gray)
    magnitude = np.hypot(gx, gy)
    span = 360.0 if params.signed else 180.0
    angle = np.rad2deg(np.arctan2(gy, gx)) % span
    bins = np.minimum(
        (angle * params.orientation_bins / span).astype(np.intp),
        params.orientation_bins - 1,
    )

    cell_of_row = np.arange(h) // cs
    cell_of_col = np.arange(w) // cs
    flat = (cell_of_row[:, None] * cx + cell_of_col[None, :]) * params.orientation_bins + bins
    hist = np.bincount(
        flat.ravel(), weights=magnitude.ravel(),
        minlength=cy * cx * params.orientation_bins,
    ).reshape(cy, cx, params.orientation_bins)

    blocks = sliding_window_view(hist, (params.block_size, params.block_size), axis=(0, 1))
    blocks = blocks[:: params.block_stride, :: params.block_stride]
    nby, nbx = blocks.shape[:2]
    vectors = blocks.reshape(nby, nbx, -1)
    norms = np.sqrt((vectors**2).sum(axis=-1, keepdims=True) + _NORM_EPS**2)
    return (vectors / norms).ravel()


def extract_hog_batch(crops, params: HogParams = HogParams()) -> np.ndarray:
    """Stack descriptors for a sequence of crops into an (n, d) float32 matrix."""
    feats = [extract_hog(c, params).astype(np.float32) for c in crops]
    return np.stack(feats) if feats else np.empty((0, 0), dtype=np.float32)


@dataclass
class BaselineModel:
    kind: BaselineKind
    hog: HogParams
    estimator: object | None = None
    seed: int = 0

    @property
    def is_fitted(self) -> bool:
        return self.estimator is not None


def fit_baseline(
    features: np.ndarray,
    labels: np.ndarray,
    kind: BaselineKind,
    *,
    hog: HogParams = HogParams(),
    C: float = 1.0,
    n_trees: int = 100,
    seed: int = 0,
) -> BaselineModel:
    """Fit a baseline scorer on precomputed descriptors.

    LinearMargin trains a hinge-loss linear classifier with regularization
    constant C; Forest trains n_trees depth-unlimited trees with sqrt(d)
    feature subsampling per split.
    """
    y = np.asarray(labels).astype(np.int64)
    X = np.asarray(features)
    if X.shape[0] != y.shape[0]:
        raise ValueError("feature rows must align with labels")
    classes = np.unique(y)
    if len(classes) < 2:
        raise DegenerateLabelsError(f"single class {classes.tolist()} in training labels")
    if kind is BaselineKind.LINEAR_MARGIN:
        estimator = LinearSVC(C=C, loss="hinge", dual=True, random_state=seed, max_iter=5000)
    elif kind is BaselineKind.FOREST:
        estimator = RandomForestClassifier(
            n_estimators=n_trees,
            max_depth=None,
            max_features="sqrt",
            random_state=seed,
            n_jobs=1,
        )
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    estimator.fit(X, y)
    return BaselineModel(kind=kind, hog=hog, estimator=estimator, seed=seed)


def score_features_baseline(model: BaselineModel, features: np.ndarray) -> np.ndarray:
    """Per-frame pain scores from precomputed descriptors (higher = more pain)."""
    if not model.is_fitted:
        raise NotFittedError("baseline model must be fitted before scoring")
    X = np.asarray(features)
    if model.kind is BaselineKind.LINEAR_MARGIN:
        return np.asarray(model.estimator.decision_function(X), dtype=np.float64)
    proba = model.estimator.predict_proba(X)
    pain_col = list(model.estimator.classes_).index(1)
    return np.asarray(proba[:, pain_col], dtype=np.float64)


def score_frames_baseline(model: BaselineModel, crops) -> np.ndarray:
    """Extract descriptors from crops with the model's HOG params and score.

    LinearMargin emits the signed margin; Forest emits the positive-class
    vote fraction in [0, 1].
    """
    if not model.is_fitted:
        raise NotFittedError("baseline model must be fitted before scoring")
    return score_features_baseline(model, extract_hog_batch(crops, model.hog))


def save_baseline(model: BaselineModel, path: str | Path) -> Path:
    """Persist kind, HOG params, seed and fitted estimator (joblib container)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    joblib.dump(
        {
            "format": 1,
            "kind": model.kind.value,
            "hog": vars(model.hog),
            "seed": model.seed,
            "estimator": model.estimator,
        },
        path,
    )
    return path


def load_baseline(path: str | Path) -> BaselineModel:
    payload = joblib.load(path)
    return BaselineModel(
        kind=BaselineKind(payload["kind"]),
        hog=HogParams(**payload["hog"]),
        estimator=payload["estimator"],
        seed=payload["seed"],
    )
