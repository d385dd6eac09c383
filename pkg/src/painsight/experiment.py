"""Experiment orchestration: config, staged pipeline, artifact layout.

A run executes preprocessing, cross-validated training, scoring, causal
smoothing, evaluation and plotting for one of the three training
regimes.  All hyperparameters default to the published training recipe
so a bare config reproduces it; the synthetic smoke path overrides the
backbone profile and schedule.

Artifact layout under output_dir:

    folds.json                  fold definitions, seeds, checkpoint paths
    train_audit.json            per-fold training-set audit (ids, sources)
    checkpoints/<fold>.{pt,joblib}
    logs/train_<fold>.csv       per-epoch (epoch, phase, lr, loss), deep only
    scores/raw/<pid>.csv        per-frame scores before smoothing
    scores/smoothed/<pid>.csv   after the causal filter (if enabled)
    report_raw.{json,txt}       metrics on raw scores
    report_smoothed.{json,txt}  metrics on smoothed scores (if enabled)
    figures/roc.png             pooled ROC of the reported scores
    figures/timeline_<pid>.png  truth band + smoothed trace per participant
    outputs.json                relative path -> sha256 of every artifact

Reports contain no timestamps or absolute paths, so identical config and
seed reproduce them byte for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
import yaml

from . import baselines, deep
from .baselines import BaselineKind, HogParams
from .datamodel import (
    DatasetManifest,
    DatasetTag,
    FrameRecord,
    load_manifest,
    resolve_frame_labels,
)
from .deep import BackboneProfile, HeadSpec, TrainSchedule
from .errors import ConfigError, PainsightError
from .evaluation import (
    Fold,
    MetricReport,
    make_lopo_folds,
    pooled_report,
    render_report_table,
    report_to_json,
)
from .labels import PainLabel
from .plots import emit_roc_plot, emit_timeline_plot
from .preprocess import (
    AugmentationSpec,
    CropSpec,
    adapt_landmarks,
    compute_crop_box,
    crop_and_resize,
    crop_cache_path,
    load_crop,
    read_landmark_file,
    save_crop,
)
from .smoothing import (
    ScoreSeries,
    SmoothingConfig,
    read_score_file,
    select_window,
    smooth_causal_uniform,
    write_score_file,
)

from PIL import Image


class Regime(str, Enum):
    SEDATION_ONLY = "sedation_only"
    COMBINED = "combined"
    EXTERNAL_ONLY = "external_only"


class ModelKind(str, Enum):
    DEEP = "deep"
    HOG_LINEAR = "hog_linear"
    HOG_FOREST = "hog_forest"


@dataclass
class ExperimentConfig:
    primary_manifest: Path
    regime: Regime = Regime.SEDATION_ONLY
    model: ModelKind = ModelKind.DEEP
    backbone_profile: BackboneProfile = BackboneProfile.PAPER
    seed: int = 0
    external_manifest: Path | None = None
    output_dir: Path = Path("out")
    smoothing_enabled: bool = True
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    crop: CropSpec = field(default_factory=CropSpec)
    augmentation: AugmentationSpec | None = field(default_factory=AugmentationSpec)
    schedule: TrainSchedule = field(default_factory=TrainSchedule)
    head: HeadSpec = field(default_factory=HeadSpec)
    hog: HogParams = field(default_factory=HogParams)
    linear_c: float = 1.0
    forest_trees: int = 100
    train_stride: int = 1     # keep every k-th primary training frame
    external_stride: int = 1  # keep every k-th external training frame
    cache_crops: bool = False

    def __post_init__(self) -> None:
        needs_external = self.regime in (Regime.COMBINED, Regime.EXTERNAL_ONLY)
        if needs_external and self.external_manifest is None:
            raise ConfigError(f"regime {self.regime.value} requires an external manifest")
        if self.train_stride < 1 or self.external_stride < 1:
            raise ConfigError("strides must be >= 1")


def _asdict_config(cfg: ExperimentConfig) -> dict:
    def convert(value):
        if isinstance(value, Path):
            return str(value)
        if isinstance(value, Enum):
            return value.value
        if dataclasses.is_dataclass(value) and not isinstance(value, type):
            return {k: convert(v) for k, v in vars(value).items()}
        if isinstance(value, tuple):
            return [convert(v) for v in value]
        return value

    return {k: convert(v) for k, v in vars(cfg).items()}


def experiment_id_for(cfg: ExperimentConfig) -> str:
    """Stable id derived from the config content (manifest paths excluded
    so identical runs in different sandboxes agree)."""
    payload = _asdict_config(cfg)
    payload.pop("primary_manifest", None)
    payload.pop("external_manifest", None)
    payload.pop("output_dir", None)
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


_CONFIG_KEYS = {
    "regime", "model", "backbone_profile", "seed", "manifests", "output_dir",
    "smoothing", "crop", "augmentation", "schedule", "head", "hog", "baseline",
    "subsample", "cache_crops",
}


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Load a YAML experiment config; relative paths resolve against the
    config file's directory.  Keyword overrides (seed, backbone_profile,
    output_dir) take precedence over the file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no config file at {path}")
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    root = path.parent

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else root / p

    manifests = raw.get("manifests") or {}
    if "primary" not in manifests:
        raise ConfigError(f"{path}: manifests.primary is required")

    kwargs: dict = {
        "primary_manifest": resolve(manifests["primary"]),
        "external_manifest": resolve(manifests["external"]) if manifests.get("external") else None,
    }
    if "regime" in raw:
        kwargs["regime"] = Regime(raw["regime"])
    if "model" in raw:
        kwargs["model"] = ModelKind(raw["model"])
    if "backbone_profile" in raw:
        kwargs["backbone_profile"] = BackboneProfile(raw["backbone_profile"])
    if "seed" in raw:
        kwargs["seed"] = int(raw["seed"])
    if "output_dir" in raw:
        kwargs["output_dir"] = resolve(raw["output_dir"])
    if "cache_crops" in raw:
        kwargs["cache_crops"] = bool(raw["cache_crops"])

    smoothing = raw.get("smoothing") or {}
    if smoothing:
        kwargs["smoothing_enabled"] = bool(smoothing.pop("enabled", True))
        if smoothing:
            kwargs["smoothing"] = SmoothingConfig(**smoothing)
    if raw.get("crop"):
        kwargs["crop"] = CropSpec(**raw["crop"])
    if "augmentation" in raw:
        aug = raw["augmentation"]
        if aug is None or aug.get("enabled", True) is False:
            kwargs["augmentation"] = None
        else:
            aug = dict(aug)
            aug.pop("enabled", None)
            if "rotation_range_deg" in aug:
                aug["rotation_range_deg"] = tuple(aug["rotation_range_deg"])
            kwargs["augmentation"] = AugmentationSpec(**aug)
    if raw.get("schedule"):
        kwargs["schedule"] = TrainSchedule(**raw["schedule"])
    if raw.get("head"):
        kwargs["head"] = HeadSpec(**raw["head"])
    if raw.get("hog"):
        kwargs["hog"] = HogParams(**raw["hog"])
    baseline = raw.get("baseline") or {}
    if "linear_c" in baseline:
        kwargs["linear_c"] = float(baseline["linear_c"])
    if "forest_trees" in baseline:
        kwargs["forest_trees"] = int(baseline["forest_trees"])
    subsample = raw.get("subsample") or {}
    if "train_stride" in subsample:
        kwargs["train_stride"] = int(subsample["train_stride"])
    if "external_stride" in subsample:
        kwargs["external_stride"] = int(subsample["external_stride"])

    for key, value in overrides.items():
        if value is None:
            continue
        if key == "backbone_profile":
            value = BackboneProfile(value)
        elif key in ("output_dir",):
            value = Path(value)
        kwargs[key] = value
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass
class ParticipantData:
    """Retained (non-excluded) frames of one participant, crop pixels included."""

    participant_id: str
    fps: int
    frame_index: np.ndarray
    timestamp_ms: np.ndarray
    labels: np.ndarray  # int8 PainLabel codes, PAIN/NO_PAIN only
    crops: np.ndarray   # (n, S, S, 3) uint8

    def binary_labels(self) -> np.ndarray:
        return (self.labels == int(PainLabel.PAIN)).astype(np.int64)


class ConcatCrops:
    """Zero-copy concatenation of per-participant crop arrays.

    Training sets span most of the dataset every fold; materializing them
    would double the resident pixel memory, so batches gather rows from
    the cached arrays on demand instead.
    """

    def __init__(self, parts: list[np.ndarray]) -> None:
        if not parts:
            raise ValueError("need at least one crop array")
        self.parts = parts
        self.offsets = np.cumsum([0] + [len(p) for p in parts])

    def __len__(self) -> int:
        return int(self.offsets[-1])

    @property
    def shape(self) -> tuple:
        return (len(self),) + self.parts[0].shape[1:]

    def take(self, indices: np.ndarray, axis: int = 0) -> np.ndarray:
        assert axis == 0
        indices = np.asarray(indices)
        out = np.empty((len(indices),) + self.parts[0].shape[1:],
                       dtype=self.parts[0].dtype)
        part_ids = np.searchsorted(self.offsets, indices, side="right") - 1
        for i, (p, j) in enumerate(zip(part_ids, indices)):
            out[i] = self.parts[p][j - self.offsets[p]]
        return out


def _fold_seed(base_seed: int, fold_index: int) -> int:
    return int(np.random.SeedSequence([base_seed, fold_index]).generate_state(1)[0])


def load_participant_crops(
    manifest: DatasetManifest,
    participant_id: str,
    crop_spec: CropSpec,
    cache_dir: Path | None = None,
    write_cache: bool = False,
) -> ParticipantData:
    """Resolve labels, drop excluded frames and produce eye-region crops.

    When cache_dir holds a previously materialized crop for a frame it is
    loaded instead of recomputed; write_cache materializes missing ones.
    """
    entry = manifest.get(participant_id)
    records = resolve_frame_labels(manifest, participant_id)
    kept = [r for r in records if r.label is not PainLabel.EXCLUDED]
    landmarks = read_landmark_file(entry.landmark_file) if entry.landmark_file else {}

    size = crop_spec.output_size
    crops = np.empty((len(kept), size, size, 3), dtype=np.uint8)
    for i, rec in enumerate(kept):
        cached = None
        if cache_dir is not None:
            p = crop_cache_path(cache_dir, participant_id, rec.frame_index)
            if p.is_file():
                cached = load_crop(cache_dir, participant_id, rec.frame_index)
        if cached is not None:
            crops[i] = cached
            continue
        with Image.open(rec.image_ref) as img:
            frame = np.asarray(img.convert("RGB"))
        lm = adapt_landmarks(landmarks[rec.frame_index], entry.landmark_schema)
        box = compute_crop_box(lm, crop_spec, (frame.shape[1], frame.shape[0]))
        crops[i] = crop_and_resize(frame, box, size)
        if write_cache and cache_dir is not None:
            save_crop(cache_dir, participant_id, rec.frame_index, crops[i])

    return ParticipantData(
        participant_id=participant_id,
        fps=entry.fps,
        frame_index=np.array([r.frame_index for r in kept], dtype=np.int64),
        timestamp_ms=np.array([r.timestamp_ms for r in kept], dtype=np.float64),
        labels=np.array([int(r.label) for r in kept], dtype=np.int8),
        crops=crops,
    )


class ExperimentRunner:
    """Owns one experiment's data, models and artifact directory."""

    def __init__(self, cfg: ExperimentConfig) -> None:
        self.cfg = cfg
        self.experiment_id = experiment_id_for(cfg)
        self.out = Path(cfg.output_dir)
        self._primary: DatasetManifest | None = None
        self._external: DatasetManifest | None = None
        self._data: dict[tuple[str, str], ParticipantData] = {}
        self._features: dict[tuple[str, str], np.ndarray] = {}
        self._models: dict[str, object] = {}

    # -- data access -------------------------------------------------

    @property
    def primary(self) -> DatasetManifest:
        if self._primary is None:
            self._primary = load_manifest(self.cfg.primary_manifest)
        return self._primary

    @property
    def external(self) -> DatasetManifest:
        if self._external is None:
            if self.cfg.external_manifest is None:
                raise ConfigError("no external manifest configured")
            self._external = load_manifest(self.cfg.external_manifest)
        return self._external

    def _crop_cache_dir(self, which: str) -> Path | None:
        if not self.cfg.cache_crops:
            return None
        return self.out / "crops" / which

    def data_for(self, which: str, participant_id: str) -> ParticipantData:
        key = (which, participant_id)
        if key not in self._data:
            manifest = self.primary if which == "primary" else self.external
            self._data[key] = load_participant_crops(
                manifest,
                participant_id,
                self.cfg.crop,
                cache_dir=self._crop_cache_dir(which),
                write_cache=self.cfg.cache_crops,
            )
        return self._data[key]

    def features_for(self, which: str, participant_id: str) -> np.ndarray:
        """HOG descriptors per retained frame; crops are dropped after
        extraction since baselines never revisit pixels."""
        key = (which, participant_id)
        if key not in self._features:
            data = self.data_for(which, participant_id)
            self._features[key] = baselines.extract_hog_batch(data.crops, self.cfg.hog)
            data.crops = np.empty((0,), dtype=np.uint8)
        return self._features[key]

    # -- folds ---------------------------------------------------------

    def folds(self) -> list[Fold]:
        aux = (
            (DatasetTag.EXTERNAL_AU_CODED,)
            if self.cfg.regime in (Regime.COMBINED, Regime.EXTERNAL_ONLY)
            else ()
        )
        return make_lopo_folds(
            self.primary,
            aux_sources=aux,
            include_primary_train=self.cfg.regime is not Regime.EXTERNAL_ONLY,
        )

    def _train_ids(self, fold: Fold) -> list[tuple[str, str, int]]:
        """(dataset, participant, stride) triples feeding this fold's training."""
        sources = [("primary", pid, self.cfg.train_stride) for pid in fold.train_participants]
        if fold.auxiliary_train_sources:
            sources += [
                ("external", pid, self.cfg.external_stride)
                for pid in self.external.participant_ids()
            ]
        return sources

    # -- stages ----------------------------------------------------------

    def preprocess(self) -> None:
        """Materialize the crop cache for every participant in play."""
        for pid in self.primary.participant_ids():
            self.data_for("primary", pid)
        if self.cfg.regime in (Regime.COMBINED, Regime.EXTERNAL_ONLY):
            for pid in self.external.participant_ids():
                self.data_for("external", pid)

    def _fit_deep(self, crops: np.ndarray, labels: np.ndarray, seed: int,
                  log_path: Path) -> deep.DeepModel:
        model = deep.build_model(
            self.cfg.head, self.cfg.backbone_profile, seed=seed
        )
        schedule = replace(self.cfg.schedule, seed=seed)
        deep.train_two_phase(
            model, crops, labels, schedule, self.cfg.augmentation, log_path=log_path
        )
        return model

    def _fit_baseline(self, feats: np.ndarray, labels: np.ndarray,
                      seed: int) -> baselines.BaselineModel:
        kind = (
            BaselineKind.LINEAR_MARGIN
            if self.cfg.model is ModelKind.HOG_LINEAR
            else BaselineKind.FOREST
        )
        return baselines.fit_baseline(
            feats,
            labels,
            kind,
            hog=self.cfg.hog,
            C=self.cfg.linear_c,
            n_trees=self.cfg.forest_trees,
            seed=seed,
        )

    def _gather_training(self, fold: Fold, use_features: bool):
        xs, ys = [], []
        audit = []
        for which, pid, stride in self._train_ids(fold):
            data = self.data_for(which, pid)
            if use_features:
                xs.append(self.features_for(which, pid)[::stride])
            else:
                xs.append(data.crops[::stride])  # strided view, no pixel copy
            ys.append(data.binary_labels()[::stride])
            audit.append(
                {"dataset": which, "participant": pid, "n_frames": int(len(ys[-1]))}
            )
        y = np.concatenate(ys) if ys else np.empty((0,), dtype=np.int64)
        if use_features:
            x = np.concatenate(xs) if xs else np.empty((0, 0))
        else:
            x = ConcatCrops(xs)
        return x, y, audit

    def train(self) -> dict[str, object]:
        """Fit one model per fold (a single shared model in the
        external-only regime) and persist checkpoints plus an audit of
        exactly which frames trained each fold."""
        folds = self.folds()
        ckpt_dir = self.out / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        use_features = self.cfg.model is not ModelKind.DEEP
        fold_meta = []
        audit_meta = []
        shared_model = None
        shared_ckpt: Path | None = None

        for i, fold in enumerate(folds):
            seed = _fold_seed(self.cfg.seed, 0 if self.cfg.regime is Regime.EXTERNAL_ONLY else i)
            if self.cfg.regime is Regime.EXTERNAL_ONLY and shared_model is not None:
                model, ckpt = shared_model, shared_ckpt
                audit = audit_meta[-1]["training_set"]
            else:
                x, y, audit = self._gather_training(fold, use_features)
                if use_features:
                    model = self._fit_baseline(x, y, seed)
                    ckpt = baselines.save_baseline(
                        model, ckpt_dir / f"{self._ckpt_stem(fold)}.joblib"
                    )
                else:
                    log_path = self.out / "logs" / f"train_{self._ckpt_stem(fold)}.csv"
                    model = self._fit_deep(x, y, seed, log_path)
                    ckpt = deep.save_checkpoint(
                        model, ckpt_dir / f"{self._ckpt_stem(fold)}.pt",
                        schedule=replace(self.cfg.schedule, seed=seed), seed=seed,
                    )
                if self.cfg.regime is Regime.EXTERNAL_ONLY:
                    shared_model, shared_ckpt = model, ckpt

            self._models[fold.test_participant] = model
            fold_meta.append(
                {
                    "test": fold.test_participant,
                    "train": list(fold.train_participants),
                    "aux_sources": [t.value for t in fold.auxiliary_train_sources],
                    "checkpoint": str(ckpt.relative_to(self.out)),
                    "seed": seed,
                }
            )
            audit_meta.append(
                {"test": fold.test_participant, "training_set": audit}
            )

        (self.out / "folds.json").write_text(
            json.dumps({"experiment_id": self.experiment_id, "folds": fold_meta},
                       sort_keys=True, indent=2) + "\n"
        )
        (self.out / "train_audit.json").write_text(
            json.dumps({"experiment_id": self.experiment_id, "folds": audit_meta},
                       sort_keys=True, indent=2) + "\n"
        )
        return dict(self._models)

    def _ckpt_stem(self, fold: Fold) -> str:
        if self.cfg.regime is Regime.EXTERNAL_ONLY:
            return "external_shared"
        return f"fold_{fold.test_participant}"

    def _load_models(self) -> None:
        folds_file = self.out / "folds.json"
        if not folds_file.is_file():
            raise PainsightError("no folds.json; run the train stage first")
        meta = json.loads(folds_file.read_text())
        for row in meta["folds"]:
            ckpt = self.out / row["checkpoint"]
            if row["test"] in self._models:
                continue
            if ckpt.suffix == ".pt":
                self._models[row["test"]] = deep.load_checkpoint(ckpt)
            else:
                self._models[row["test"]] = baselines.load_baseline(ckpt)

    def score(self) -> dict[str, ScoreSeries]:
        """Score every fold's held-out participant and write raw score files."""
        if not self._models:
            self._load_models()
        series_by_pid: dict[str, ScoreSeries] = {}
        for fold in self.folds():
            pid = fold.test_participant
            data = self.data_for("primary", pid)
            model = self._models[pid]
            if isinstance(model, baselines.BaselineModel):
                scores = baselines.score_features_baseline(
                    model, self.features_for("primary", pid)
                )
            else:
                scores = deep.score_frames_deep(
                    model, data.crops, batch_size=self.cfg.schedule.batch_size
                )
            series = ScoreSeries.build(
                pid, data.fps, data.frame_index, data.timestamp_ms, scores, data.labels
            )
            write_score_file(
                self.out / "scores" / "raw" / f"{pid}.csv", series,
                smoothed=False, window=0,
            )
            series_by_pid[pid] = series
        return series_by_pid

    def smooth(self, raw: dict[str, ScoreSeries] | None = None) -> dict[str, ScoreSeries]:
        raw = raw if raw is not None else self._read_scores("raw")
        smoothed: dict[str, ScoreSeries] = {}
        for pid, series in raw.items():
            window = select_window(series.fps, self.cfg.smoothing)
            out = smooth_causal_uniform(series, window)
            write_score_file(
                self.out / "scores" / "smoothed" / f"{pid}.csv", out,
                smoothed=True, window=window,
            )
            smoothed[pid] = out
        return smoothed

    def _read_scores(self, which: str) -> dict[str, ScoreSeries]:
        score_dir = self.out / "scores" / which
        if not score_dir.is_dir():
            raise PainsightError(f"no {which} scores under {score_dir}; run earlier stages")
        out: dict[str, ScoreSeries] = {}
        for path in sorted(score_dir.glob("*.csv")):
            series, _, _ = read_score_file(path)
            # recover exact fps from the manifest (frame spacing is a heuristic)
            fps = self.primary.get(series.participant_id).fps
            out[series.participant_id] = replace(series, fps=fps)
        return out

    def evaluate(
        self,
        raw: dict[str, ScoreSeries] | None = None,
        smoothed: dict[str, ScoreSeries] | None = None,
    ) -> MetricReport:
        """Write reports for raw (and, if enabled, smoothed) scores and
        return the one matching the configured smoothing setting."""
        folds = self.folds()
        raw = raw if raw is not None else self._read_scores("raw")
        reports: dict[str, MetricReport] = {}
        pairs = [(f, raw[f.test_participant]) for f in folds]
        reports["raw"] = pooled_report(pairs, self.experiment_id, smoothed=False)
        if self.cfg.smoothing_enabled:
            if smoothed is None:
                smoothed = self._read_scores("smoothed")
            pairs = [(f, smoothed[f.test_participant]) for f in folds]
            reports["smoothed"] = pooled_report(pairs, self.experiment_id, smoothed=True)
        for name, report in reports.items():
            (self.out / f"report_{name}.json").write_text(report_to_json(report))
            (self.out / f"report_{name}.txt").write_text(render_report_table(report))
        return reports["smoothed" if self.cfg.smoothing_enabled else "raw"]

    def plot(
        self,
        series: dict[str, ScoreSeries] | None = None,
    ) -> list[Path]:
        """Pooled ROC plus one timeline per participant, from the scores
        matching the configured smoothing setting."""
        which = "smoothed" if self.cfg.smoothing_enabled else "raw"
        series = series if series is not None else self._read_scores(which)
        fig_dir = self.out / "figures"
        keep = [s for s in series.values() if len(s)]
        scores = np.concatenate([s.scores for s in keep])
        labels = np.concatenate([s.labels for s in keep])
        paths = [
            emit_roc_plot(
                scores, labels, fig_dir / "roc.png",
                title=f"{self.cfg.model.value} / {self.cfg.regime.value} ({which})",
            )
        ]
        for pid in sorted(series):
            s = series[pid]
            paths.append(
                emit_timeline_plot(
                    pid, s.labels, {self.cfg.model.value: s},
                    fig_dir / f"timeline_{pid}.png",
                )
            )
        return paths

    def write_outputs_manifest(self) -> Path:
        """sha256 of every artifact, keyed by path relative to output_dir."""
        entries = {}
        for path in sorted(self.out.rglob("*")):
            if not path.is_file() or path.name == "outputs.json":
                continue
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            entries[str(path.relative_to(self.out))] = digest
        out_path = self.out / "outputs.json"
        out_path.write_text(json.dumps({"files": entries}, sort_keys=True, indent=2) + "\n")
        return out_path

    def run(self) -> MetricReport:
        """All stages in sequence with in-memory handoff between them."""
        self.out.mkdir(parents=True, exist_ok=True)
        self.train()
        raw = self.score()
        smoothed = self.smooth(raw) if self.cfg.smoothing_enabled else None
        report = self.evaluate(raw, smoothed)
        self.plot(smoothed if smoothed is not None else raw)
        self.write_outputs_manifest()
        return report


def run_experiment(cfg: ExperimentConfig) -> MetricReport:
    """Execute the full pipeline for one config; see ExperimentRunner."""
    return ExperimentRunner(cfg).run()
