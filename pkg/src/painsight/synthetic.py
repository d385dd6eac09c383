"""Synthetic occluded-face dataset with a known Bayes-optimal oracle.

Frames are schematic eye regions drawn from geometric primitives: a
skin-tone canvas, brows, open or closed eyes, a flat lower-face mask
band, and (on pain frames) a brow-furrow pattern of known amplitude
added between the brows, all under i.i.d. Gaussian pixel noise.  Because
the furrow template and the noise model are known exactly, the matched
filter over the furrow region is the likelihood-ratio statistic, giving
an upper bound no trained model should exceed beyond sampling error.

Eye closure is sampled from per-label probabilities and never from the
furrow amplitude.  Equal probabilities make closure label-independent
(the sedation-like regime); unequal probabilities make closure itself
predictive (the externally coded regime), which is exactly the shortcut
a cross-dataset model can latch onto.

Pain frames arrive in contiguous episodes of fixed length so that causal
smoothing has structure to exploit.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .datamodel import (
    DatasetManifest,
    DatasetTag,
    ExclusionInterval,
    LabelInterval,
    LandmarkSchema,
    Participant,
    ParticipantMeta,
    save_manifest,
    validate_manifest,
)
from .errors import SpecError, SpecMismatchError
from .labels import PainLabel
from .preprocess import (
    SPARSE68_COUNT,
    SPARSE68_LEFT_INNER,
    SPARSE68_LEFT_OUTER,
    SPARSE68_RIGHT_INNER,
    SPARSE68_RIGHT_OUTER,
    write_landmark_file,
)
from .pspi import ActionUnitVector, write_au_file

FRAME_W = 128
FRAME_H = 96
_CX = FRAME_W // 2
_EYE_Y = 52
_BROW_ROWS = (38, 42)      # half-open row span of the brow bars
_MASK_TOP = 66             # first row of the lower-face mask band
_FURROW_ROWS = (26, 49)    # half-open bounding rows of the furrow region
_FURROW_COLS = (_CX - 10, _CX + 11)
_LINE_ROWS = (28, 46)      # vertical groove extent inside the region
_GROOVE_OFFSETS = (-7, -1, 5)  # leftmost column of each groove, relative to center
_GROOVE_WIDTH = 3


@dataclass(frozen=True)
class SynthSpec:
    """Generation parameters; see module docstring for their roles."""

    n_participants: int = 6
    frames_per_participant: int = 2000
    fps: int = 30
    episode_length_frames: int = 200
    pain_prevalence: float = 0.35
    cue_strength: float = 8.0        # furrow contrast amplitude, gray levels
    eyes_closed_prob_pain: float = 0.65
    eyes_closed_prob_nopain: float = 0.65
    noise_sigma: float = 12.0
    seed: int = 0
    label_source: str = "intervals"  # "intervals" (rater-style) or "au" (coded)

    def __post_init__(self) -> None:
        if self.n_participants < 1 or self.frames_per_participant < 1:
            raise SpecError("need at least one participant and one frame")
        if self.fps < 1:
            raise SpecError("fps must be >= 1")
        if self.episode_length_frames < 1:
            raise SpecError("episode_length_frames must be >= 1")
        if not 0.0 <= self.pain_prevalence <= 1.0:
            raise SpecError("pain_prevalence must be in [0, 1]")
        for name in ("eyes_closed_prob_pain", "eyes_closed_prob_nopain"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise SpecError(f"{name} must be in [0, 1]")
        if self.cue_strength < 0 or self.noise_sigma < 0:
            raise SpecError("cue_strength and noise_sigma must be >= 0")
        if self.label_source not in ("intervals", "au"):
            raise SpecError(f"unknown label_source {self.label_source!r}")


def strong_cue_spec(seed: int = 2026) -> SynthSpec:
    """Stock spec for end-to-end acceptance: learnable furrow cue,
    closure independent of the label (sedation-like)."""
    return SynthSpec(seed=seed)


def closure_confound_spec(seed: int = 2027) -> SynthSpec:
    """Stock spec reproducing the cross-dataset failure mode: a weak
    furrow cue but eye closure strongly correlated with pain (externally
    coded data, labels derived from per-frame action units)."""
    return SynthSpec(
        n_participants=4,
        frames_per_participant=1200,
        episode_length_frames=120,
        pain_prevalence=0.4,
        cue_strength=2.0,
        eyes_closed_prob_pain=0.85,
        eyes_closed_prob_nopain=0.05,
        noise_sigma=12.0,
        seed=seed,
        label_source="au",
    )


STOCK_SPECS = {
    "strong-cue": strong_cue_spec,
    "closure-confound": closure_confound_spec,
}


def furrow_template() -> np.ndarray:
    """Zero-mean furrow pattern over the inter-brow region.

    Three vertical grooves at -1 against a compensating positive
    background, so that adding cue_strength * template leaves the region
    mean unchanged (skin-tone offsets cancel in the matched filter)."""
    rows = _FURROW_ROWS[1] - _FURROW_ROWS[0]
    cols = _FURROW_COLS[1] - _FURROW_COLS[0]
    t = np.zeros((rows, cols), dtype=np.float64)
    r0, r1 = _LINE_ROWS[0] - _FURROW_ROWS[0], _LINE_ROWS[1] - _FURROW_ROWS[0]
    for off in _GROOVE_OFFSETS:
        c0 = _CX + off - _FURROW_COLS[0]
        t[r0:r1, c0:c0 + _GROOVE_WIDTH] = -1.0
    t -= t.mean()
    return t


@dataclass(frozen=True)
class _Appearance:
    skin: np.ndarray        # (3,) base skin tone
    mask: np.ndarray        # (3,) mask band tone
    intercanthal: int
    eye_width: int

    @property
    def left_inner_x(self) -> int:
        return _CX - self.intercanthal // 2

    @property
    def right_inner_x(self) -> int:
        return _CX + (self.intercanthal - self.intercanthal // 2)


def _draw_appearance(rng: np.random.Generator) -> _Appearance:
    skin = np.array([178.0, 144.0, 122.0]) + rng.uniform(-25, 25, 3)
    mask = np.array([204.0, 208.0, 214.0]) + rng.uniform(-10, 10)
    return _Appearance(
        skin=skin,
        mask=mask,
        intercanthal=36 + int(rng.integers(-6, 7)),
        eye_width=13 + int(rng.integers(-2, 3)),
    )


def _pain_schedule(n: int, spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Boolean pain mask: episodes of exactly episode_length_frames
    separated by gaps sized to hit the target prevalence; a random phase
    offset keeps the first episode complete (only the last may truncate)."""
    p = spec.pain_prevalence
    if p <= 0.0:
        return np.zeros(n, dtype=bool)
    if p >= 1.0:
        return np.ones(n, dtype=bool)
    ep = spec.episode_length_frames
    gap = max(1, round(ep * (1.0 - p) / p))
    period = ep + gap
    phase = int(rng.integers(0, gap + 1))
    return (np.arange(n) + phase) % period >= gap


def _draw_eye(img: np.ndarray, x_inner: int, x_outer: int, skin: np.ndarray,
              closed: bool) -> None:
    x_lo, x_hi = min(x_inner, x_outer), max(x_inner, x_outer)
    if closed:
        img[_EYE_Y - 1:_EYE_Y + 2, x_lo:x_hi + 1] = skin - 60.0
        return
    img[_EYE_Y - 3:_EYE_Y + 4, x_lo:x_hi + 1] = skin + 40.0  # sclera band
    cx_eye = (x_lo + x_hi) // 2
    yy, xx = np.mgrid[_EYE_Y - 3:_EYE_Y + 4, cx_eye - 3:cx_eye + 4]
    iris = (yy - _EYE_Y) ** 2 + (xx - cx_eye) ** 2 <= 9
    img[_EYE_Y - 3:_EYE_Y + 4, cx_eye - 3:cx_eye + 4][iris] = 40.0


def _render_frame(app: _Appearance, pain: bool, closed: bool, spec: SynthSpec,
                  rng: np.random.Generator) -> np.ndarray:
    img = np.empty((FRAME_H, FRAME_W, 3), dtype=np.float64)
    img[:] = app.skin

    li, ri = app.left_inner_x, app.right_inner_x
    lo, ro = li - app.eye_width, ri + app.eye_width
    img[_BROW_ROWS[0]:_BROW_ROWS[1], lo:li + 1] = app.skin - 70.0
    img[_BROW_ROWS[0]:_BROW_ROWS[1], ri:ro + 1] = app.skin - 70.0
    _draw_eye(img, li, lo, app.skin, closed)
    _draw_eye(img, ri, ro, app.skin, closed)

    img[_MASK_TOP:, :] = app.mask
    img[_MASK_TOP, :] = app.mask - 40.0  # mask top edge

    if pain and spec.cue_strength > 0:
        region = img[_FURROW_ROWS[0]:_FURROW_ROWS[1], _FURROW_COLS[0]:_FURROW_COLS[1]]
        region += spec.cue_strength * furrow_template()[..., None]

    if spec.noise_sigma > 0:
        img += rng.normal(0.0, spec.noise_sigma, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def _sparse68_points(app: _Appearance) -> np.ndarray:
    """Static 68-point landmark set with exact canthi; the remaining
    points are plausible filler the crop adapter never reads."""
    pts = np.zeros((SPARSE68_COUNT, 2), dtype=np.float64)
    theta = np.linspace(np.pi * 0.15, np.pi * 0.85, 17)
    pts[0:17, 0] = _CX + 52 * np.cos(np.pi - theta)          # jaw arc
    pts[0:17, 1] = 40 + 50 * np.sin(theta)
    li, ri = app.left_inner_x, app.right_inner_x
    lo, ro = li - app.eye_width, ri + app.eye_width
    pts[17:22] = np.linspace((lo - 2, 37.0), (li + 1, 36.0), 5)   # brows
    pts[22:27] = np.linspace((ri - 1, 36.0), (ro + 2, 37.0), 5)
    pts[27:31] = np.linspace((_CX, 50.0), (_CX, 62.0), 4)         # nose ridge
    pts[31:36] = np.linspace((_CX - 6, 63.0), (_CX + 6, 63.0), 5)
    eye_y = float(_EYE_Y)
    pts[SPARSE68_LEFT_OUTER] = (float(lo), eye_y)
    pts[37] = (lo + app.eye_width * 0.33, eye_y - 2)
    pts[38] = (lo + app.eye_width * 0.66, eye_y - 2)
    pts[SPARSE68_LEFT_INNER] = (float(li), eye_y)
    pts[40] = (lo + app.eye_width * 0.66, eye_y + 2)
    pts[41] = (lo + app.eye_width * 0.33, eye_y + 2)
    pts[SPARSE68_RIGHT_INNER] = (float(ri), eye_y)
    pts[43] = (ri + app.eye_width * 0.33, eye_y - 2)
    pts[44] = (ri + app.eye_width * 0.66, eye_y - 2)
    pts[SPARSE68_RIGHT_OUTER] = (float(ro), eye_y)
    pts[46] = (ri + app.eye_width * 0.66, eye_y + 2)
    pts[47] = (ri + app.eye_width * 0.33, eye_y + 2)
    angles = np.linspace(0, 2 * np.pi, 20, endpoint=False)        # mouth ring
    pts[48:68, 0] = _CX + 12 * np.cos(angles)
    pts[48:68, 1] = 78 + 5 * np.sin(angles)
    return pts


def _runs_to_intervals(pain: np.ndarray, fps: int) -> tuple[LabelInterval, ...]:
    """Full-coverage rating intervals whose boundaries sit exactly on
    frame timestamps, so resolution round-trips the schedule."""
    n = len(pain)
    edges = np.flatnonzero(np.diff(pain.astype(np.int8))) + 1
    bounds = np.concatenate([[0], edges, [n]])
    out = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        rating = PainLabel.PAIN if pain[a] else PainLabel.NO_PAIN
        out.append(LabelInterval(a * 1000.0 / fps, b * 1000.0 / fps, rating))
    return tuple(out)


def generate_synthetic_dataset(spec: SynthSpec, out_dir: str | Path) -> DatasetManifest:
    """Render the dataset to disk and return its validated manifest.

    Layout under out_dir: frames/<pid>/<index>.png, landmarks/<pid>.csv,
    au/<pid>.csv (AU-coded specs only) and manifest.jsonl.  Fully
    deterministic given spec.seed; per-participant and per-frame streams
    are derived independently so generation order never matters.
    """
    out_dir = Path(out_dir)
    (out_dir / "frames").mkdir(parents=True, exist_ok=True)
    (out_dir / "landmarks").mkdir(exist_ok=True)
    if spec.label_source == "au":
        (out_dir / "au").mkdir(exist_ok=True)

    participants: list[Participant] = []
    for p_idx in range(spec.n_participants):
        pid = f"S{p_idx + 1:03d}"
        rng_p = np.random.default_rng([spec.seed, p_idx])
        app = _draw_appearance(rng_p)
        pain = _pain_schedule(spec.frames_per_participant, spec, rng_p)

        frames_dir = out_dir / "frames" / pid
        frames_dir.mkdir(exist_ok=True)
        au_rows: list[ActionUnitVector] = []
        for f_idx in range(spec.frames_per_participant):
            rng_f = np.random.default_rng([spec.seed, p_idx, f_idx])
            p_closed = (
                spec.eyes_closed_prob_pain if pain[f_idx] else spec.eyes_closed_prob_nopain
            )
            closed = bool(rng_f.random() < p_closed)
            if spec.label_source == "au":
                au4 = 4 + int(rng_f.integers(0, 2)) if pain[f_idx] else 0
                au_rows.append(ActionUnitVector(au4=au4, au43=int(closed)))
            frame = _render_frame(app, bool(pain[f_idx]), closed, spec, rng_f)
            Image.fromarray(frame).save(frames_dir / f"{f_idx:06d}.png", format="PNG")

        landmark_path = out_dir / "landmarks" / f"{pid}.csv"
        points = _sparse68_points(app)
        write_landmark_file(
            landmark_path,
            {i: points for i in range(spec.frames_per_participant)},
        )

        if spec.label_source == "au":
            au_path = out_dir / "au" / f"{pid}.csv"
            write_au_file(au_path, au_rows)
            participants.append(
                Participant(
                    meta=ParticipantMeta(pid, spec.fps, DatasetTag.EXTERNAL_AU_CODED),
                    frames_dir=frames_dir,
                    landmark_file=landmark_path,
                    landmark_schema=LandmarkSchema.SPARSE_68,
                    au_file=au_path,
                )
            )
        else:
            participants.append(
                Participant(
                    meta=ParticipantMeta(pid, spec.fps, DatasetTag.SEDATION),
                    frames_dir=frames_dir,
                    landmark_file=landmark_path,
                    landmark_schema=LandmarkSchema.SPARSE_68,
                    label_intervals=_runs_to_intervals(pain, spec.fps),
                    exclusions=(),
                )
            )

    manifest = DatasetManifest(participants)
    validate_manifest(manifest)
    save_manifest(manifest, out_dir / "manifest.jsonl")
    return manifest


def bayes_optimal_score(frame: np.ndarray, spec: SynthSpec) -> float:
    """Likelihood-ratio statistic of the furrow cue for one raw frame.

    Under the generator's Gaussian noise the matched filter against the
    known zero-mean template is the optimal statistic; the value is
    normalized to read as an amplitude estimate (approximately 0 on
    cue-free frames, cue_strength on pain frames)."""
    arr = np.asarray(frame)
    if arr.shape != (FRAME_H, FRAME_W, 3):
        raise SpecMismatchError(
            f"frame shape {arr.shape} does not match the generator canvas "
            f"({FRAME_H}, {FRAME_W}, 3)"
        )
    gray = arr.astype(np.float64).mean(axis=2)
    region = gray[_FURROW_ROWS[0]:_FURROW_ROWS[1], _FURROW_COLS[0]:_FURROW_COLS[1]]
    t = furrow_template()
    centered = region - region.mean()
    return float((centered * t).sum() / (t * t).sum())


def bayes_optimal_scores(frames, spec: SynthSpec) -> np.ndarray:
    return np.array([bayes_optimal_score(f, spec) for f in frames], dtype=np.float64)
