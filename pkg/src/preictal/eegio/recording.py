"""Core EEG domain types shared by every parser."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from preictal.errors import ValidationError


@dataclass(frozen=True)
class SeizureAnnotation:
    """Onset/offset of one seizure, in seconds from the timeline start."""

    onset_s: float
    offset_s: float

    def __post_init__(self):
        if not (0 <= self.onset_s < self.offset_s):
            raise ValidationError(
                f"seizure annotation needs 0 <= onset < offset, got "
                f"[{self.onset_s}, {self.offset_s}]"
            )


def validate_annotations(annotations: list[SeizureAnnotation], duration_s: float | None = None):
    """Check annotations are sorted by onset, non-overlapping, and in range."""
    for i, ann in enumerate(annotations):
        if duration_s is not None and ann.offset_s > duration_s:
            raise ValidationError(
                f"annotation {i} ends at {ann.offset_s}s, past timeline end {duration_s}s"
            )
        if i > 0 and ann.onset_s < annotations[i - 1].offset_s:
            raise ValidationError(
                f"annotations {i - 1} and {i} overlap or are unsorted "
                f"({annotations[i - 1].offset_s} > {ann.onset_s})"
            )


@dataclass
class Recording:
    """Multichannel EEG samples in physical units (microvolts).

    data is a (channels, duration_samples) float32 array. Values are treated
    as immutable after construction; parsers never hand out aliased buffers.
    """

    sampling_rate: float
    data: np.ndarray
    channel_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValidationError(f"recording data must be 2-D, got shape {self.data.shape}")
        if self.channels < 1:
            raise ValidationError("recording needs at least one channel")
        if not self.sampling_rate > 0:
            raise ValidationError(f"sampling rate must be positive, got {self.sampling_rate}")
        if not self.channel_labels:
            self.channel_labels = [f"ch{i}" for i in range(self.channels)]
        if len(self.channel_labels) != self.channels:
            raise ValidationError(
                f"{len(self.channel_labels)} labels for {self.channels} channels"
            )

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def duration_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration_s(self) -> float:
        return self.duration_samples / self.sampling_rate
