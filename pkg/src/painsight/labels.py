"""Ground-truth label vocabulary.

Lives in its own module so that labeling (pain scores) and the data
model can both import it without a cycle.
"""

from __future__ import annotations

from enum import IntEnum


class PainLabel(IntEnum):
    """Per-frame ground truth.

    EXCLUDED frames never enter training sets and never enter metric
    computation; they mark rater silence, out-of-view segments and the
    ambiguous pain-score band.
    """

    NO_PAIN = 0
    PAIN = 1
    EXCLUDED = 2

    def to_str(self) -> str:
        return self.name.lower()

    @classmethod
    def from_str(cls, text: str) -> "PainLabel":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown pain label {text!r}") from None
