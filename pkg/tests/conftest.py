"""Shared fixtures: tiny on-disk datasets and session-scoped experiment runs.

The expensive end-to-end artifacts (strong-cue dataset, trained runs)
are session fixtures so the acceptance criteria and module property
tests share one computation.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from painsight.baselines import HogParams
from painsight.datamodel import load_manifest
from painsight.deep import BackboneProfile, TrainSchedule
from painsight.evaluation import MetricReport, report_from_json
from painsight.experiment import ExperimentConfig, ExperimentRunner, ModelKind, Regime
from painsight.synthetic import (
    SynthSpec,
    closure_confound_spec,
    generate_synthetic_dataset,
    strong_cue_spec,
)


def make_frames_dir(path: Path, n_frames: int, size=(16, 16)) -> Path:
    """Directory of blank zero-padded frame images."""
    path.mkdir(parents=True, exist_ok=True)
    arr = np.full((size[1], size[0], 3), 128, dtype=np.uint8)
    for i in range(n_frames):
        Image.fromarray(arr).save(path / f"{i:06d}.png")
    return path


def write_manifest_lines(path: Path, records: list[dict]) -> Path:
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
    return path


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory) -> Path:
    """Small rater-labeled synthetic dataset for fast pipeline tests."""
    root = tmp_path_factory.mktemp("tiny_data")
    spec = SynthSpec(
        n_participants=2,
        frames_per_participant=150,
        episode_length_frames=40,
        pain_prevalence=0.4,
        seed=3,
    )
    generate_synthetic_dataset(spec, root)
    return root


@pytest.fixture(scope="session")
def tiny_au_dataset(tmp_path_factory) -> Path:
    """Small AU-coded synthetic dataset (external-style labels)."""
    root = tmp_path_factory.mktemp("tiny_au_data")
    spec = SynthSpec(
        n_participants=2,
        frames_per_participant=120,
        episode_length_frames=30,
        pain_prevalence=0.4,
        eyes_closed_prob_pain=0.85,
        eyes_closed_prob_nopain=0.05,
        seed=4,
        label_source="au",
    )
    generate_synthetic_dataset(spec, root)
    return root


@pytest.fixture(scope="session")
def strong_cue_dir(tmp_path_factory) -> tuple[Path, SynthSpec, float]:
    """The stock strong-cue dataset (6 x 2000 frames) plus generation time."""
    root = tmp_path_factory.mktemp("strong_cue")
    spec = strong_cue_spec()
    t0 = time.perf_counter()
    generate_synthetic_dataset(spec, root)
    return root, spec, time.perf_counter() - t0


@pytest.fixture(scope="session")
def confound_dir(tmp_path_factory) -> tuple[Path, SynthSpec]:
    root = tmp_path_factory.mktemp("closure_confound")
    spec = closure_confound_spec()
    generate_synthetic_dataset(spec, root)
    return root, spec


def _load_reports(out_dir: Path) -> dict[str, MetricReport]:
    out = {}
    for name in ("raw", "smoothed"):
        path = out_dir / f"report_{name}.json"
        if path.is_file():
            out[name] = report_from_json(path.read_text())
    return out


ACCEPTANCE_SCHEDULE = TrainSchedule(
    phase1_epochs=2, phase2_epochs=1, batch_size=128, base_lr=0.001
)
ACCEPTANCE_HOG = HogParams(cell_size=16)


@pytest.fixture(scope="session")
def deep_run(strong_cue_dir, tmp_path_factory):
    """SedationOnly + deep (smoke) on strong-cue, with smoothing."""
    data_dir, spec, gen_seconds = strong_cue_dir
    out = tmp_path_factory.mktemp("deep_run")
    cfg = ExperimentConfig(
        primary_manifest=data_dir / "manifest.jsonl",
        regime=Regime.SEDATION_ONLY,
        model=ModelKind.DEEP,
        backbone_profile=BackboneProfile.SMOKE,
        seed=7,
        output_dir=out,
        augmentation=None,
        schedule=ACCEPTANCE_SCHEDULE,
    )
    t0 = time.perf_counter()
    ExperimentRunner(cfg).run()
    run_seconds = time.perf_counter() - t0
    reports = _load_reports(out)
    return {
        "out": out,
        "reports": reports,
        "run_seconds": run_seconds,
        "gen_seconds": gen_seconds,
        "spec": spec,
    }


@pytest.fixture(scope="session")
def hog_linear_run(strong_cue_dir, tmp_path_factory):
    """SedationOnly + HOG/linear baseline on the same strong-cue data."""
    data_dir, spec, _ = strong_cue_dir
    out = tmp_path_factory.mktemp("hog_run")
    cfg = ExperimentConfig(
        primary_manifest=data_dir / "manifest.jsonl",
        regime=Regime.SEDATION_ONLY,
        model=ModelKind.HOG_LINEAR,
        backbone_profile=BackboneProfile.SMOKE,
        seed=7,
        output_dir=out,
        augmentation=None,
        hog=ACCEPTANCE_HOG,
        train_stride=2,
    )
    ExperimentRunner(cfg).run()
    return {"out": out, "reports": _load_reports(out)}


@pytest.fixture(scope="session")
def cross_dataset_run(strong_cue_dir, confound_dir, tmp_path_factory):
    """ExternalOnly + HOG/linear: trained on closure-confound data, tested
    on the strong-cue participants (closure label-independent there)."""
    data_dir, _, _ = strong_cue_dir
    ext_dir, _ = confound_dir
    out = tmp_path_factory.mktemp("cross_run")
    cfg = ExperimentConfig(
        primary_manifest=data_dir / "manifest.jsonl",
        regime=Regime.EXTERNAL_ONLY,
        model=ModelKind.HOG_LINEAR,
        backbone_profile=BackboneProfile.SMOKE,
        seed=7,
        external_manifest=ext_dir / "manifest.jsonl",
        output_dir=out,
        augmentation=None,
        hog=ACCEPTANCE_HOG,
        external_stride=1,
    )
    ExperimentRunner(cfg).run()
    return {"out": out, "reports": _load_reports(out)}


@pytest.fixture()
def tiny_manifest(tiny_dataset) -> Path:
    return tiny_dataset / "manifest.jsonl"


@pytest.fixture()
def tiny_loaded(tiny_dataset):
    return load_manifest(tiny_dataset / "manifest.jsonl")
