"""Dataset manifests and the stitched global timeline.

A patient's data may span several recording files with gaps between them.
The manifest pins each file onto a single global timeline; the Timeline
object loads them and exposes gap-aware sample access so that no window can
ever straddle a region without data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from preictal.eegio.edf import parse_edf
from preictal.eegio.rawbin import read_raw_binary
from preictal.eegio.recording import Recording, SeizureAnnotation, validate_annotations
from preictal.errors import FormatError, ValidationError


@dataclass(frozen=True)
class RecordingEntry:
    path: str
    format: str  # "edf" or "eegr"
    start_s: float


@dataclass
class DatasetManifest:
    patient_id: str
    recordings: list[RecordingEntry]
    annotations: list[SeizureAnnotation] = field(default_factory=list)

    def __post_init__(self):
        starts = [r.start_s for r in self.recordings]
        if starts != sorted(starts):
            raise ValidationError("manifest recordings must be sorted by start offset")
        validate_annotations(self.annotations)

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        raw = json.loads(text)
        return cls(
            patient_id=raw["patient_id"],
            recordings=[
                RecordingEntry(path=r["path"], format=r["format"], start_s=float(r["start_s"]))
                for r in raw["recordings"]
            ],
            annotations=[
                SeizureAnnotation(onset_s=float(a["onset_s"]), offset_s=float(a["offset_s"]))
                for a in raw.get("annotations", [])
            ],
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "patient_id": self.patient_id,
                "recordings": [
                    {"path": r.path, "format": r.format, "start_s": r.start_s}
                    for r in self.recordings
                ],
                "annotations": [
                    {"onset_s": a.onset_s, "offset_s": a.offset_s} for a in self.annotations
                ],
            },
            indent=2,
        )


def _load_recording(path: Path, fmt: str) -> Recording:
    data = path.read_bytes()
    if fmt == "edf":
        return parse_edf(data)
    if fmt == "eegr":
        return read_raw_binary(data)
    raise FormatError(f"unknown recording format {fmt!r} for {path}")


@dataclass
class Timeline:
    """Recordings stitched onto one global timeline, with their annotations."""

    patient_id: str
    segments: list[tuple[float, Recording]]  # (global start_s, recording), sorted
    annotations: list[SeizureAnnotation] = field(default_factory=list)

    def __post_init__(self):
        if not self.segments:
            raise ValidationError("timeline needs at least one recording")
        rates = {rec.sampling_rate for _, rec in self.segments}
        channels = {rec.channels for _, rec in self.segments}
        if len(rates) > 1 or len(channels) > 1:
            raise ValidationError(
                f"recordings disagree on rate/channels: rates {sorted(rates)}, "
                f"channels {sorted(channels)}"
            )
        prev_end = None
        for start, rec in self.segments:
            if prev_end is not None and start < prev_end - 1e-9:
                raise ValidationError(
                    f"recording at {start}s overlaps previous one ending at {prev_end}s"
                )
            prev_end = start + rec.duration_s
        validate_annotations(self.annotations, duration_s=self.duration_s)

    @classmethod
    def from_recording(
        cls,
        recording: Recording,
        annotations: list[SeizureAnnotation],
        patient_id: str = "synthetic",
    ) -> "Timeline":
        return cls(patient_id=patient_id, segments=[(0.0, recording)], annotations=annotations)

    @property
    def sampling_rate(self) -> float:
        return self.segments[0][1].sampling_rate

    @property
    def channels(self) -> int:
        return self.segments[0][1].channels

    @property
    def duration_s(self) -> float:
        start, rec = self.segments[-1]
        return start + rec.duration_s

    def coverage(self) -> list[tuple[float, float]]:
        """Spans of the global timeline that have sample data."""
        return [(start, start + rec.duration_s) for start, rec in self.segments]

    def gaps(self) -> list[tuple[float, float]]:
        """Spans with no data (between files); windows must not straddle them."""
        out = []
        cursor = 0.0
        for start, end in self.coverage():
            if start > cursor + 1e-9:
                out.append((cursor, start))
            cursor = end
        return out

    def extract(self, start_s: float, n_samples: int) -> np.ndarray:
        """Return (channels, n_samples) of data beginning at global start_s.

        The window must lie entirely inside one recording.
        """
        for seg_start, rec in self.segments:
            first = int(round((start_s - seg_start) * rec.sampling_rate))
            if first < 0:
                continue
            if first + n_samples <= rec.duration_samples:
                return rec.data[:, first : first + n_samples]
        raise ValidationError(
            f"window [{start_s}s, +{n_samples} samples] does not fit inside any recording"
        )


def load_timeline(manifest: DatasetManifest, base_dir: Path | str = ".") -> Timeline:
    base = Path(base_dir)
    segments = []
    for entry in manifest.recordings:
        rec = _load_recording(base / entry.path, entry.format)
        segments.append((entry.start_s, rec))
    return Timeline(
        patient_id=manifest.patient_id,
        segments=segments,
        annotations=list(manifest.annotations),
    )
