"""Pain detection on partially occluded faces.

End-to-end pipeline: eye-region preprocessing from external landmarks,
pain-score and rater-interval labeling, deep and HOG baselines,
causal temporal smoothing and leave-one-person-out evaluation, plus a
synthetic dataset generator with a known scoring oracle for
verification without clinical data.
"""

from .labels import PainLabel
from .datamodel import (
    DatasetManifest,
    DatasetTag,
    FrameRecord,
    LabelInterval,
    ExclusionInterval,
    Participant,
    ParticipantMeta,
    load_manifest,
    resolve_frame_labels,
    save_manifest,
)
from .pspi import (
    ActionUnitVector,
    BinarizationPolicy,
    binarize_pspi,
    compute_pspi,
)
from .preprocess import (
    AugmentationSpec,
    CanonicalEyeLandmarks,
    CropSpec,
    adapt_landmarks,
    augment_frame,
    compute_crop_box,
    crop_and_resize,
    intercanthal_distance,
)
from .baselines import (
    BaselineKind,
    BaselineModel,
    HogParams,
    extract_hog,
    fit_baseline,
    score_frames_baseline,
)
from .deep import (
    BackboneProfile,
    DeepModel,
    HeadSpec,
    TrainSchedule,
    build_model,
    lr_at_epoch,
    score_frames_deep,
    train_two_phase,
)
from .smoothing import (
    ScoreSeries,
    SmoothingConfig,
    select_window,
    smooth_causal_uniform,
)
from .evaluation import (
    Fold,
    MetricReport,
    compute_average_precision,
    compute_roc_auc,
    make_lopo_folds,
    pooled_report,
)
from .synthetic import (
    SynthSpec,
    bayes_optimal_score,
    closure_confound_spec,
    generate_synthetic_dataset,
    strong_cue_spec,
)
from .experiment import (
    ExperimentConfig,
    ModelKind,
    Regime,
    load_config,
    run_experiment,
)

__version__ = "0.1.0"
