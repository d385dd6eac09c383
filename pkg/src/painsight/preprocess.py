"""Eye-region preprocessing: landmarks to normalized crops, plus training
augmentations.

The crop is parameterized by the intercanthal distance d (inner eye
corners): a box extending half_width_factor*d to each side of the
inner-canthus midpoint, above_factor*d above it (brow and forehead carry
the usable pain cues on masked faces) and below_factor*d below, clamped
to the image and resized to a square.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    ConfidenceError,
    DegenerateGeometryError,
    EmptyBoxError,
    SchemaError,
)
from .datamodel import LandmarkSchema

# Canthus indices in the 68-point sparse template (0-based):
# image-left eye outer/inner corners, then image-right inner/outer.
SPARSE68_COUNT = 68
SPARSE68_LEFT_OUTER = 36
SPARSE68_LEFT_INNER = 39
SPARSE68_RIGHT_INNER = 42
SPARSE68_RIGHT_OUTER = 45

# Dense face-mesh indices for the same four corners; the mesh has 468
# points (478 when iris refinement is enabled).
DENSE_MESH_COUNTS = (468, 478)
DENSE_LEFT_OUTER = 33
DENSE_LEFT_INNER = 133
DENSE_RIGHT_INNER = 362
DENSE_RIGHT_OUTER = 263


@dataclass(frozen=True)
class CanonicalEyeLandmarks:
    """Four canthi in source-image pixel coordinates.

    left/right refer to image coordinates: right_inner.x > left_inner.x.
    """

    left_inner_canthus: tuple[float, float]
    right_inner_canthus: tuple[float, float]
    left_outer_canthus: tuple[float, float]
    right_outer_canthus: tuple[float, float]


@dataclass(frozen=True)
class CropSpec:
    half_width_factor: float = 2.0
    above_factor: float = 2.0
    below_factor: float = 1.0
    output_size: int = 224

    def __post_init__(self) -> None:
        if min(self.half_width_factor, self.above_factor, self.below_factor) <= 0:
            raise ValueError("crop factors must be positive")
        if self.output_size < 16:
            raise ValueError("output_size must be >= 16")


@dataclass(frozen=True)
class AugmentationSpec:
    """Training-time augmentation parameters.

    Affine and rotation angles sample uniformly over their ranges; color
    jitter factors sample uniformly in +/- the stated relative deltas.
    The affine shear/translation components default to off so the affine
    step is a pure rotation unless configured otherwise.
    """

    horizontal_flip_prob: float = 0.5
    max_affine_deg: float = 30.0
    shear_deg: float = 0.0
    translate_frac: float = 0.0
    rotation_range_deg: tuple[float, float] = (-10.0, 10.0)
    brightness: float = 0.2
    contrast: float = 0.2
    saturation: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.horizontal_flip_prob <= 1.0:
            raise ValueError("horizontal_flip_prob must be in [0, 1]")
        if self.rotation_range_deg[0] > self.rotation_range_deg[1]:
            raise ValueError("rotation range must be (min, max)")

    @property
    def is_identity(self) -> bool:
        return (
            self.horizontal_flip_prob == 0.0
            and self.max_affine_deg == 0.0
            and self.shear_deg == 0.0
            and self.translate_frac == 0.0
            and self.rotation_range_deg == (0.0, 0.0)
            and self.brightness == 0.0
            and self.contrast == 0.0
            and self.saturation == 0.0
        )


IDENTITY_AUGMENTATION = AugmentationSpec(
    horizontal_flip_prob=0.0,
    max_affine_deg=0.0,
    rotation_range_deg=(0.0, 0.0),
    brightness=0.0,
    contrast=0.0,
    saturation=0.0,
)


def adapt_landmarks(
    points: np.ndarray, schema_id: LandmarkSchema
) -> CanonicalEyeLandmarks:
    """Extract the four canthi from a provider-specific landmark set.

    Accepts (N, 2) arrays with N = 68 for the sparse schema and 468/478
    for the dense mesh.  Raises SchemaError on a point-count mismatch and
    ConfidenceError when the provider flagged no face (non-finite canthus
    coordinates).  Eyes are normalized so that the image-left eye is the
    one with the smaller inner-canthus x.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise SchemaError(f"expected an (N, 2) landmark array, got {pts.shape}")
    n = pts.shape[0]
    if schema_id is LandmarkSchema.SPARSE_68:
        if n != SPARSE68_COUNT:
            raise SchemaError(f"sparse schema expects 68 points, got {n}")
        li, ri = pts[SPARSE68_LEFT_INNER], pts[SPARSE68_RIGHT_INNER]
        lo, ro = pts[SPARSE68_LEFT_OUTER], pts[SPARSE68_RIGHT_OUTER]
    elif schema_id is LandmarkSchema.DENSE_MESH:
        if n not in DENSE_MESH_COUNTS:
            raise SchemaError(
                f"dense mesh expects {DENSE_MESH_COUNTS} points, got {n}"
            )
        li, ri = pts[DENSE_LEFT_INNER], pts[DENSE_RIGHT_INNER]
        lo, ro = pts[DENSE_LEFT_OUTER], pts[DENSE_RIGHT_OUTER]
    else:
        raise SchemaError(f"unknown landmark schema {schema_id!r}")

    selected = np.stack([li, ri, lo, ro])
    if not np.isfinite(selected).all():
        raise ConfidenceError("landmark provider flagged no face for this frame")
    if ri[0] < li[0]:  # mirrored provider output
        li, ri = ri, li
        lo, ro = ro, lo
    return CanonicalEyeLandmarks(
        left_inner_canthus=(float(li[0]), float(li[1])),
        right_inner_canthus=(float(ri[0]), float(ri[1])),
        left_outer_canthus=(float(lo[0]), float(lo[1])),
        right_outer_canthus=(float(ro[0]), float(ro[1])),
    )


def intercanthal_distance(lm: CanonicalEyeLandmarks) -> float:
    """Euclidean distance between the inner canthi, the crop scale reference."""
    (x0, y0), (x1, y1) = lm.left_inner_canthus, lm.right_inner_canthus
    d = math.hypot(x1 - x0, y1 - y0)
    if d < 1.0:
        raise DegenerateGeometryError(f"intercanthal distance {d:.3g} px < 1")
    return d


def compute_crop_box(
    lm: CanonicalEyeLandmarks, spec: CropSpec, image_size: tuple[int, int]
) -> tuple[int, int, int, int]:
    """Crop rectangle (x0, y0, x1, y1) around the eyes, clamped to the image.

    image_size is (width, height).
    """
    width, height = image_size
    d = intercanthal_distance(lm)
    (lx, ly), (rx, ry) = lm.left_inner_canthus, lm.right_inner_canthus
    mx, my = (lx + rx) / 2.0, (ly + ry) / 2.0
    x0 = int(round(mx - spec.half_width_factor * d))
    x1 = int(round(mx + spec.half_width_factor * d))
    y0 = int(round(my - spec.above_factor * d))
    y1 = int(round(my + spec.below_factor * d))
    x0, x1 = max(x0, 0), min(x1, width)
    y0, y1 = max(y0, 0), min(y1, height)
    if x1 <= x0 or y1 <= y0:
        raise DegenerateGeometryError(
            f"crop box clamped to zero area for image {width}x{height}"
        )
    return (x0, y0, x1, y1)


def crop_and_resize(
    frame: np.ndarray, box: tuple[int, int, int, int], output_size: int
) -> np.ndarray:
    """Crop the box from an HxWx3 frame and resample to a square.

    Aspect distortion is permitted: non-square boxes stretch to fit.
    """
    x0, y0, x1, y1 = box
    h, w = frame.shape[:2]
    if x1 <= x0 or y1 <= y0:
        raise EmptyBoxError(f"empty crop box {box}")
    if x0 < 0 or y0 < 0 or x1 > w or y1 > h:
        raise EmptyBoxError(f"crop box {box} outside {w}x{h} frame")
    region = frame[y0:y1, x0:x1]
    if region.shape[0] == output_size and region.shape[1] == output_size:
        return region.copy()
    img = Image.fromarray(region)
    img = img.resize((output_size, output_size), Image.BILINEAR)
    return np.asarray(img)


def _affine(img: Image.Image, angle_deg: float, shear_deg: float,
            translate: tuple[float, float]) -> Image.Image:
    # inverse-map affine about the image center, matching rotate() semantics
    w, h = img.size
    cx, cy = w / 2.0, h / 2.0
    a = math.radians(angle_deg)
    s = math.radians(shear_deg)
    cos_a, sin_a = math.cos(a), math.sin(a)
    # rotation followed by x-shear; invert for PIL's output->input mapping
    m = np.array([[cos_a, -sin_a + math.tan(s) * cos_a],
                  [sin_a, cos_a + math.tan(s) * sin_a]])
    inv = np.linalg.inv(m)
    tx, ty = translate
    offset = np.array([cx + tx, cy + ty])
    shift = np.array([cx, cy]) - inv @ offset
    coeffs = (inv[0, 0], inv[0, 1], shift[0], inv[1, 0], inv[1, 1], shift[1])
    return img.transform((w, h), Image.AFFINE, coeffs, resample=Image.BILINEAR)


def _jitter(arr: np.ndarray, brightness: float, contrast: float,
            saturation: float) -> np.ndarray:
    out = arr.astype(np.float32)
    if brightness != 1.0:
        out = out * brightness
    if contrast != 1.0:
        mean = out.mean()
        out = mean + (out - mean) * contrast
    if saturation != 1.0:
        gray = out @ np.array([0.299, 0.587, 0.114], dtype=np.float32)
        out = gray[..., None] + (out - gray[..., None]) * saturation
    return np.clip(out, 0, 255).astype(np.uint8)


def augment_frame(
    img: np.ndarray, spec: AugmentationSpec, rng: np.random.Generator
) -> np.ndarray:
    """Apply one random flip/affine/jitter/rotation draw to an image.

    Deterministic given (img, spec, generator state); output keeps the
    input dimensions.  A fully zeroed spec returns the input unchanged.
    """
    if spec.is_identity:
        return img

    arr = img
    if spec.horizontal_flip_prob > 0 and rng.random() < spec.horizontal_flip_prob:
        arr = arr[:, ::-1]

    needs_affine = spec.max_affine_deg > 0 or spec.shear_deg > 0 or spec.translate_frac > 0
    angle = rng.uniform(-spec.max_affine_deg, spec.max_affine_deg) if spec.max_affine_deg > 0 else 0.0
    shear = rng.uniform(-spec.shear_deg, spec.shear_deg) if spec.shear_deg > 0 else 0.0
    if spec.translate_frac > 0:
        h, w = arr.shape[:2]
        translate = (
            rng.uniform(-spec.translate_frac, spec.translate_frac) * w,
            rng.uniform(-spec.translate_frac, spec.translate_frac) * h,
        )
    else:
        translate = (0.0, 0.0)
    if needs_affine:
        pil = Image.fromarray(np.ascontiguousarray(arr))
        arr = np.asarray(_affine(pil, angle, shear, translate))

    b = 1.0 + rng.uniform(-spec.brightness, spec.brightness) if spec.brightness > 0 else 1.0
    c = 1.0 + rng.uniform(-spec.contrast, spec.contrast) if spec.contrast > 0 else 1.0
    s = 1.0 + rng.uniform(-spec.saturation, spec.saturation) if spec.saturation > 0 else 1.0
    if (b, c, s) != (1.0, 1.0, 1.0):
        arr = _jitter(np.ascontiguousarray(arr), b, c, s)

    lo, hi = spec.rotation_range_deg
    if lo != 0.0 or hi != 0.0:
        theta = rng.uniform(lo, hi)
        pil = Image.fromarray(np.ascontiguousarray(arr))
        arr = np.asarray(pil.rotate(theta, resample=Image.BILINEAR))
    return np.ascontiguousarray(arr)


def read_landmark_file(path: str | Path) -> dict[int, np.ndarray]:
    """Read per-frame landmark rows ``frame_index, x0, y0, x1, y1, ...``.

    Returns a map from frame index to an (N, 2) float array.  Rows with
    empty coordinate fields parse to NaN so a no-face frame surfaces as
    ConfidenceError at adaptation time.
    """
    out: dict[int, np.ndarray] = {}
    with Path(path).open(newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            idx = int(row[0])
            coords = np.array(
                [float(v) if v.strip() else np.nan for v in row[1:]], dtype=np.float64
            )
            if coords.size % 2:
                raise SchemaError(f"{path}: odd coordinate count on frame {idx}")
            out[idx] = coords.reshape(-1, 2)
    return out


def write_landmark_file(path: str | Path, per_frame: dict[int, np.ndarray]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        for idx in sorted(per_frame):
            coords = np.asarray(per_frame[idx], dtype=np.float64).reshape(-1)
            writer.writerow([idx] + [repr(float(v)) for v in coords])


def crop_cache_path(cache_dir: Path, participant_id: str, frame_index: int) -> Path:
    """Documented cache layout: <cache_dir>/<participant>/<frame_index>.png."""
    return cache_dir / participant_id / f"{frame_index:06d}.png"


def save_crop(cache_dir: Path, participant_id: str, frame_index: int,
              crop: np.ndarray) -> Path:
    path = crop_cache_path(cache_dir, participant_id, frame_index)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(crop).save(path, format="PNG")
    return path


def load_crop(cache_dir: Path, participant_id: str, frame_index: int) -> np.ndarray:
    with Image.open(crop_cache_path(cache_dir, participant_id, frame_index)) as img:
        return np.asarray(img.convert("RGB"))
