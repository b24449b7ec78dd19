"""Parser for CHB-MIT summary annotation files.

The dataset ships one `chbNN-summary.txt` per patient: line-oriented ASCII
with a block per EDF file declaring how many seizures it holds and their
start/end second counts relative to the file start.
"""

from __future__ import annotations

import re

from preictal.eegio.recording import SeizureAnnotation, validate_annotations
from preictal.errors import ValidationError

_FILE_RE = re.compile(r"^File Name:\s*(\S+)", re.IGNORECASE)
_COUNT_RE = re.compile(r"^Number of Seizures in File:\s*(\d+)", re.IGNORECASE)
_START_RE = re.compile(r"^Seizure(?:\s+\d+)?\s+Start Time:\s*(\d+(?:\.\d+)?)\s*sec", re.IGNORECASE)
_END_RE = re.compile(r"^Seizure(?:\s+\d+)?\s+End Time:\s*(\d+(?:\.\d+)?)\s*sec", re.IGNORECASE)


def parse_chbmit_summary(text: str) -> dict[str, list[SeizureAnnotation]]:
    """Extract per-file seizure annotations from summary text.

    Returns {file name: sorted annotations}, seconds relative to file start.
    Raises ValidationError when a block declares more seizures than it lists,
    when an end precedes its start, or when annotations overlap.
    """
    result: dict[str, list[SeizureAnnotation]] = {}
    current: str | None = None
    declared = 0
    starts: list[float] = []
    ends: list[float] = []

    def close_block():
        if current is None:
            return
        if len(starts) != declared or len(ends) != declared:
            raise ValidationError(
                f"{current}: declares {declared} seizures but lists "
                f"{len(starts)} starts / {len(ends)} ends"
            )
        annotations = []
        for onset, offset in zip(starts, ends):
            if offset <= onset:
                raise ValidationError(
                    f"{current}: seizure end {offset}s not after start {onset}s"
                )
            annotations.append(SeizureAnnotation(onset_s=onset, offset_s=offset))
        annotations.sort(key=lambda a: a.onset_s)
        validate_annotations(annotations)
        result[current] = annotations

    for line in text.splitlines():
        line = line.strip()
        m = _FILE_RE.match(line)
        if m:
            close_block()
            current = m.group(1)
            declared = 0
            starts, ends = [], []
            continue
        m = _COUNT_RE.match(line)
        if m:
            declared = int(m.group(1))
            continue
        m = _START_RE.match(line)
        if m:
            if current is None:
                raise ValidationError("seizure time listed before any file block")
            starts.append(float(m.group(1)))
            continue
        m = _END_RE.match(line)
        if m:
            if current is None:
                raise ValidationError("seizure time listed before any file block")
            ends.append(float(m.group(1)))
    close_block()
    return result
