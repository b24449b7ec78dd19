"""Timeline labeling, window extraction, and leakage-free partitioning.

Labeling rules: each lead seizure (one whose onset is at least 30 minutes
after the preceding seizure's end) contributes a preictal span of length ppl
ending an intervention time before its onset. Ictal and postictal spans plus
a d-length buffer around every preictal span are excluded; whatever remains
is interictal. Preictal windows tile their spans with 50% overlap, interictal
windows tile without overlap and may be randomly downsampled. Partitioning
holds out the last lead seizure for the test set; internal cross-validation
folds hold out one remaining seizure each.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from preictal.eegio.manifest import Timeline
from preictal.eegio.recording import SeizureAnnotation
from preictal.errors import EmptyDatasetError, InsufficientSeizuresError, ValidationError

INTERICTAL = "interictal"
PREICTAL = "preictal"
ICTAL = "ictal"
POSTICTAL = "postictal"
BUFFER = "buffer"
GAP = "gap"

# priority when spans overlap: data gaps beat everything, exclusion zones beat
# preictal, preictal beats its surrounding buffer, interictal fills the rest
_PRIORITY = {GAP: 5, ICTAL: 4, POSTICTAL: 3, PREICTAL: 2, BUFFER: 1}

MIN_LEAD_SEIZURES = 3


@dataclass(frozen=True)
class LabelParams:
    """Labeling parameters: window size s, preictal length ppl, intervention
    time it, interictal distance d, all in seconds."""

    window_size_s: float
    ppl_s: float
    it_s: float = 0.0
    d_s: float = 0.0
    postictal_s: float = 1800.0
    interictal_downsample: int = 1
    preictal_overlap: float = 0.5
    min_lead_gap_s: float = 1800.0

    def __post_init__(self):
        if self.window_size_s <= 0:
            raise ValidationError(f"window size must be positive, got {self.window_size_s}")
        if self.ppl_s < self.window_size_s:
            raise ValidationError(
                f"ppl ({self.ppl_s}s) must be at least one window ({self.window_size_s}s)"
            )
        if self.it_s < 0 or self.d_s < 0 or self.postictal_s < 0:
            raise ValidationError("it_s, d_s and postictal_s must be non-negative")
        if self.interictal_downsample < 1 or self.interictal_downsample != int(self.interictal_downsample):
            raise ValidationError(
                f"interictal_downsample must be an integer >= 1, got {self.interictal_downsample}"
            )
        if not 0 < self.preictal_overlap < 1:
            raise ValidationError(f"preictal overlap must be in (0, 1), got {self.preictal_overlap}")
        if self.min_lead_gap_s <= 0:
            raise ValidationError("min_lead_gap_s must be positive")


@dataclass(frozen=True)
class LabeledSpan:
    start_s: float
    end_s: float
    state: str
    lead_index: int | None = None  # lead ordinal for preictal/interictal spans

    @property
    def length_s(self) -> float:
        return self.end_s - self.start_s


@dataclass
class LabeledWindow:
    """One fixed-size sample: (channels, window_size*f) data plus its label."""

    data: np.ndarray | None
    label: str  # INTERICTAL or PREICTAL
    seizure_index: int  # associated lead ordinal
    start_s: float
    held_out: bool = False


@dataclass
class Partition:
    train: list[LabeledWindow]
    test: list[LabeledWindow]
    held_out_seizure: int


@dataclass
class CVFold:
    fold_seizure: int
    train: list[LabeledWindow]
    validation: list[LabeledWindow]


def find_lead_seizures(
    annotations: list[SeizureAnnotation], min_gap_s: float = 1800.0
) -> list[int]:
    """Indices of lead seizures: onset at least min_gap_s after the previous
    seizure's end. The first seizure is always lead."""
    for i in range(1, len(annotations)):
        if annotations[i].onset_s < annotations[i - 1].offset_s:
            raise ValidationError("annotations must be sorted and non-overlapping")
    leads = []
    for i, ann in enumerate(annotations):
        if i == 0 or ann.onset_s - annotations[i - 1].offset_s >= min_gap_s:
            leads.append(i)
    return leads


def _clip(start: float, end: float, duration_s: float) -> tuple[float, float]:
    return max(0.0, start), min(duration_s, end)


def label_timeline(
    duration_s: float,
    annotations: list[SeizureAnnotation],
    params: LabelParams,
    gaps: list[tuple[float, float]] | None = None,
) -> list[LabeledSpan]:
    """Assign a state to every instant of [0, duration_s].

    Returns maximal half-open spans sorted by start. Preictal spans carry the
    lead ordinal of their seizure; interictal spans carry the lead ordinal of
    the next lead seizure on the timeline (the last one, once past it).
    """
    for ann in annotations:
        if ann.offset_s > duration_s:
            raise ValidationError(f"annotation {ann} extends past timeline end {duration_s}")
    leads = find_lead_seizures(annotations, params.min_lead_gap_s)

    claims: list[tuple[float, float, str, int | None, tuple]] = []

    def claim(start, end, state, lead_idx=None, rank2=0):
        start, end = _clip(start, end, duration_s)
        if end > start:
            claims.append((start, end, state, lead_idx, (_PRIORITY[state], rank2)))

    for gap_start, gap_end in gaps or []:
        claim(gap_start, gap_end, GAP)
    for ann in annotations:
        claim(ann.onset_s, ann.offset_s, ICTAL)
        claim(ann.offset_s, ann.offset_s + params.postictal_s, POSTICTAL)
    for ordinal, idx in enumerate(leads):
        onset = annotations[idx].onset_s
        pre_end = onset - params.it_s
        pre_start = pre_end - params.ppl_s
        # when preictal spans of consecutive leads overlap, the earlier onset
        # wins (nearest upcoming seizure owns the data)
        claim(pre_start, pre_end, PREICTAL, ordinal, rank2=-ordinal)
        if params.d_s > 0:
            claim(pre_start - params.d_s, pre_start, BUFFER)
            claim(pre_end, pre_end + params.d_s, BUFFER)

    # sweep the elementary intervals between claim boundaries, tracking the
    # set of claims covering the current interval
    events: list[tuple[float, int, int]] = [(0.0, 0, -1), (duration_s, 0, -1)]
    for i, c in enumerate(claims):
        events.append((c[0], 1, i))
        events.append((c[1], -1, i))
    events.sort(key=lambda e: (e[0], e[1]))
    bounds = sorted({e[0] for e in events})
    active: dict[int, tuple] = {}
    spans: list[LabeledSpan] = []

    def next_lead_ordinal(end_s: float) -> int:
        for ordinal, idx in enumerate(leads):
            if annotations[idx].onset_s >= end_s - 1e-9:
                return ordinal
        return len(leads) - 1

    pos = 0
    for left, right in zip(bounds[:-1], bounds[1:]):
        while pos < len(events) and events[pos][0] <= left:
            _, kind, ci = events[pos]
            if kind == -1:
                active.pop(ci, None)
            elif kind == 1:
                active[ci] = claims[ci][4]
            pos += 1
        if right <= left:
            continue
        if active:
            best = max(active, key=active.get)
            state, lead_idx = claims[best][2], claims[best][3]
        else:
            state, lead_idx = INTERICTAL, None
        if spans and spans[-1].state == state and spans[-1].lead_index == lead_idx and state != INTERICTAL:
            spans[-1] = LabeledSpan(spans[-1].start_s, right, state, lead_idx)
        elif spans and state == INTERICTAL and spans[-1].state == INTERICTAL:
            spans[-1] = LabeledSpan(spans[-1].start_s, right, state, None)
        else:
            spans.append(LabeledSpan(left, right, state, lead_idx))

    # interictal association: next lead seizure on the timeline
    out = []
    for span in spans:
        if span.state == INTERICTAL:
            if not leads:
                continue  # no seizures at all: nothing to associate or train on
            span = LabeledSpan(span.start_s, span.end_s, INTERICTAL, next_lead_ordinal(span.end_s))
        out.append(span)

    if leads and not any(s.state == PREICTAL for s in out):
        raise EmptyDatasetError(
            "every lead seizure's preictal span fell outside the usable timeline"
        )
    return out


@dataclass(frozen=True)
class WindowPlacement:
    start_s: float
    label: str
    seizure_index: int


def plan_windows(
    spans: list[LabeledSpan], params: LabelParams, seed: int
) -> list[WindowPlacement]:
    """Window start times and labels, without touching sample data.

    Preictal spans tile with stride s*(1-overlap); interictal spans tile with
    stride s and are then uniformly subsampled, keeping 1/downsample of them.
    Spans shorter than one window are skipped.
    """
    s = params.window_size_s
    pre_stride = s * (1.0 - params.preictal_overlap)
    placements: list[WindowPlacement] = []
    interictal: list[WindowPlacement] = []

    for span in spans:
        if span.state not in (PREICTAL, INTERICTAL):
            continue
        stride = pre_stride if span.state == PREICTAL else s
        count = _window_count(span.length_s, s, stride)
        for k in range(count):
            placement = WindowPlacement(span.start_s + k * stride, span.state, span.lead_index)
            if span.state == PREICTAL:
                placements.append(placement)
            else:
                interictal.append(placement)

    factor = params.interictal_downsample
    if factor > 1 and interictal:
        keep = max(1, len(interictal) // factor)
        rng = np.random.default_rng(seed)
        chosen = sorted(rng.choice(len(interictal), size=keep, replace=False))
        interictal = [interictal[i] for i in chosen]

    placements.extend(interictal)
    placements.sort(key=lambda p: (p.start_s, p.label))
    return placements


def _window_count(span_length: float, window: float, stride: float) -> int:
    if span_length < window - 1e-9:
        return 0
    return int(np.floor((span_length - window) / stride + 1e-9)) + 1


def extract_windows(
    timeline: Timeline,
    spans: list[LabeledSpan],
    params: LabelParams,
    seed: int,
) -> list[LabeledWindow]:
    """Materialize labeled windows from the timeline. Raises EmptyDatasetError
    when no window fits anywhere."""
    placements = plan_windows(spans, params, seed)
    if not placements:
        raise EmptyDatasetError("segmentation produced zero windows")
    n_samples = int(round(params.window_size_s * timeline.sampling_rate))
    return [
        LabeledWindow(
            data=timeline.extract(p.start_s, n_samples),
            label=p.label,
            seizure_index=p.seizure_index,
            start_s=p.start_s,
        )
        for p in placements
    ]


def loso_partition(windows: list[LabeledWindow], n_lead_seizures: int) -> Partition:
    """Hold out the last lead seizure: its preictal windows plus the
    interictal windows associated with it form the test set."""
    if n_lead_seizures < MIN_LEAD_SEIZURES:
        raise InsufficientSeizuresError(
            f"LOSO partitioning needs at least {MIN_LEAD_SEIZURES} lead seizures, "
            f"got {n_lead_seizures}"
        )
    held_out = n_lead_seizures - 1
    train, test = [], []
    for w in windows:
        if w.seizure_index == held_out:
            w.held_out = True
            test.append(w)
        else:
            train.append(w)
    return Partition(train=train, test=test, held_out_seizure=held_out)


def cv_folds(partition: Partition) -> list[CVFold]:
    """One fold per training lead seizure; its windows form the validation set."""
    seizures = sorted({w.seizure_index for w in partition.train})
    if len(seizures) < 2:
        raise InsufficientSeizuresError(
            f"cross-validation needs at least 2 training seizures, got {len(seizures)}"
        )
    folds = []
    for fold_seizure in seizures:
        fold_train = [w for w in partition.train if w.seizure_index != fold_seizure]
        validation = [w for w in partition.train if w.seizure_index == fold_seizure]
        folds.append(CVFold(fold_seizure=fold_seizure, train=fold_train, validation=validation))
    return folds
