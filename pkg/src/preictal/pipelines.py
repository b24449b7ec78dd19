"""Per-architecture input preparation.

Each pipeline turns labeled raw windows into the array a model consumes.
fit() learns whatever statistics are needed from training windows only;
transform() then applies to any split. Image pipelines are stateless; the
sequence pipeline standardizes with training-set channel statistics, so
fitting it on anything else would leak.
"""

from __future__ import annotations

import numpy as np

from preictal import dsp
from preictal.errors import ValidationError
from preictal.models import CNN_IMAGE_SIZE, SUB_IMAGE_SIZE, is_autoencoder
from preictal.segmentation import PREICTAL, LabeledWindow

DOWNSAMPLE_FACTOR = 4
DEFAULT_SUB_WINDOW_S = 5.0


class ImagePipeline:
    """Window -> (C, 128, 128) log-spectrogram image."""

    def __init__(self, size: int = CNN_IMAGE_SIZE):
        self.size = size

    def fit(self, train_windows: list[LabeledWindow]):
        return self

    def transform(self, windows: list[LabeledWindow]) -> np.ndarray:
        return np.stack([dsp.spectrogram_image(w.data, self.size) for w in windows])


class SubImagePipeline:
    """Window -> (n, C, 64, 64): the window is cut into sub-windows, each
    transformed independently."""

    def __init__(self, sub_window_s: float = DEFAULT_SUB_WINDOW_S, size: int = SUB_IMAGE_SIZE):
        if sub_window_s <= 0:
            raise ValidationError(f"sub-window length must be positive, got {sub_window_s}")
        self.sub_window_s = sub_window_s
        self.size = size

    def fit(self, train_windows: list[LabeledWindow]):
        return self

    def _split(self, data: np.ndarray, sampling_rate: float) -> list[np.ndarray]:
        sub_samples = int(round(self.sub_window_s * sampling_rate))
        n = data.shape[1] // sub_samples
        if n < 1:
            raise ValidationError(
                f"window of {data.shape[1]} samples too short for "
                f"{self.sub_window_s}s sub-windows at {sampling_rate} Hz"
            )
        return [data[:, i * sub_samples : (i + 1) * sub_samples] for i in range(n)]

    def transform_with_rate(self, windows: list[LabeledWindow], sampling_rate: float) -> np.ndarray:
        out = []
        for w in windows:
            subs = self._split(w.data, sampling_rate)
            out.append(np.stack([dsp.spectrogram_image(s, self.size) for s in subs]))
        return np.stack(out)


class SequencePipeline:
    """Window -> (C, S/4): block-mean downsample then standardize with
    training-set per-channel statistics."""

    def __init__(self, factor: int = DOWNSAMPLE_FACTOR):
        self.factor = factor
        self.stats: dsp.ChannelStats | None = None

    def fit(self, train_windows: list[LabeledWindow]):
        down = [dsp.downsample(w.data, self.factor) for w in train_windows]
        self.stats = dsp.compute_stats(down)
        return self

    def transform(self, windows: list[LabeledWindow]) -> np.ndarray:
        if self.stats is None:
            raise ValidationError("sequence pipeline must be fit on training windows first")
        return np.stack(
            [dsp.standardize(dsp.downsample(w.data, self.factor), self.stats) for w in windows]
        )


def build_pipeline(arch: str, sampling_rate: float, sub_window_s: float = DEFAULT_SUB_WINDOW_S):
    """Pipeline instance for an architecture plus a uniform transform callable."""
    base = arch[:-3] if is_autoencoder(arch) else arch
    if base == "cnn":
        pipe = ImagePipeline()
        return pipe, lambda ws: pipe.transform(ws)
    if base == "cnn_lstm":
        pipe = SubImagePipeline(sub_window_s)
        return pipe, lambda ws: pipe.transform_with_rate(ws, sampling_rate)
    if base == "tcn":
        pipe = SequencePipeline()
        return pipe, lambda ws: pipe.transform(ws)
    raise ValidationError(f"unknown architecture {arch!r}")


def labels_array(windows: list[LabeledWindow]) -> np.ndarray:
    """0 = interictal, 1 = preictal."""
    return np.array([1 if w.label == PREICTAL else 0 for w in windows], dtype=np.int64)
