"""Exception hierarchy shared across the pipeline."""


class PainsightError(Exception):
    """Base class for all pipeline errors."""


class ManifestParseError(PainsightError):
    """Manifest file is malformed and cannot be parsed."""


class ValidationError(PainsightError):
    """Manifest parsed but violates an invariant (overlapping intervals,
    dangling locator, dual labeling sources, ...)."""


class MissingFramesError(PainsightError):
    """A participant's frame directory resolves to zero frames."""


class LabelSourceError(PainsightError):
    """AU file row count does not match the participant's frame count."""


class RangeError(PainsightError, ValueError):
    """A numeric argument is outside its documented range."""


class SchemaError(PainsightError):
    """Landmark point count does not match the declared schema."""


class ConfidenceError(PainsightError):
    """Landmark provider flagged no face (non-finite canthus coordinates)."""


class DegenerateGeometryError(PainsightError):
    """Eye geometry unusable: coincident canthi or empty crop box."""


class EmptyBoxError(PainsightError):
    """Crop box is empty or falls outside the frame."""


class DimensionError(PainsightError):
    """Image dimensions incompatible with the feature extractor geometry."""


class DegenerateLabelsError(PainsightError):
    """Training set contains a single class."""


class NotFittedError(PainsightError):
    """Baseline model used for scoring before fit."""


class NotTrainedError(PainsightError):
    """Deep model used for scoring before training."""


class WeightsUnavailableError(PainsightError):
    """No pretrained weight source for the requested backbone."""


class NonFiniteLossError(PainsightError):
    """Training loss became NaN/Inf; aborted with diagnostics."""


class EmptySeriesError(PainsightError):
    """Smoothing requested on an empty score series."""


class TooFewParticipantsError(PainsightError):
    """Cross-validation needs at least two primary participants."""


class MissingFoldError(PainsightError):
    """Report assembly received a fold without a matching score series."""


class SingleClassError(PainsightError):
    """ROC plot requested for a single-class label vector."""


class MisalignedSeriesError(PainsightError):
    """Timeline plot inputs do not align on frame index."""


class SpecError(PainsightError):
    """Synthetic dataset spec violates its invariants."""


class SpecMismatchError(PainsightError):
    """Frame handed to the oracle was not produced by the matching spec."""


class ConfigError(PainsightError):
    """Experiment config missing or inconsistent."""
