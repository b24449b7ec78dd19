"""Signal transforms that turn raw windows into model inputs.

The image pipeline is STFT magnitude -> log compression -> bilinear resize to
a square image per channel -> standardization over the image stack. The
sequence pipeline is block-mean downsampling followed by per-channel
standardization with statistics computed on the training split only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from preictal.errors import ValidationError

STFT_SEGMENT = 128
STFT_HOP = 64


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean and standard deviation, shapes (C,)."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValidationError("mean and std must be 1-D arrays of equal length")


def stft_magnitude(
    x: np.ndarray, segment: int = STFT_SEGMENT, hop: int = STFT_HOP
) -> np.ndarray:
    """Hann-windowed STFT magnitude.

    x is (C, N) or (N,); returns (C, segment//2 + 1, T) with
    T = (N - segment)//hop + 1. Frames are taken from the signal start with no
    padding, so N must be at least one segment.
    """
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValidationError(f"expected 1-D or 2-D input, got {x.ndim}-D")
    n = x.shape[1]
    if n < segment:
        raise ValidationError(f"signal length {n} is shorter than one segment ({segment})")
    n_frames = (n - segment) // hop + 1
    window = np.hanning(segment).astype(np.float64)
    starts = np.arange(n_frames) * hop
    frames = np.stack([x[:, s : s + segment] for s in starts], axis=1)  # (C, T, seg)
    spectrum = np.fft.rfft(frames * window, axis=2)
    return np.abs(spectrum).astype(np.float32).transpose(0, 2, 1)  # (C, F, T)


def log_scale(mag: np.ndarray) -> np.ndarray:
    """log(1 + x): compresses dynamic range, keeps zeros at zero."""
    if np.any(mag < 0):
        raise ValidationError("log scaling expects non-negative magnitudes")
    return np.log1p(mag, dtype=np.float32)


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize the trailing two axes with half-pixel-centered bilinear sampling.

    Accepts (H, W) or (C, H, W). Edge samples clamp to the border row/column.
    """
    if out_h < 1 or out_w < 1:
        raise ValidationError(f"output size must be positive, got {out_h}x{out_w}")
    squeeze = img.ndim == 2
    if squeeze:
        img = img[None]
    if img.ndim != 3:
        raise ValidationError(f"expected 2-D or 3-D input, got {img.ndim}-D")
    c, h, w = img.shape

    def axis_weights(n_in: int, n_out: int):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        lo = np.floor(src).astype(np.int64)
        frac = (src - lo).astype(np.float32)
        lo0 = np.clip(lo, 0, n_in - 1)
        lo1 = np.clip(lo + 1, 0, n_in - 1)
        return lo0, lo1, frac

    y0, y1, fy = axis_weights(h, out_h)
    x0, x1, fx = axis_weights(w, out_w)
    img = img.astype(np.float32)
    top = img[:, y0, :] * (1 - fy)[None, :, None] + img[:, y1, :] * fy[None, :, None]
    out = top[:, :, x0] * (1 - fx)[None, None, :] + top[:, :, x1] * fx[None, None, :]
    return out[0] if squeeze else out


def spectrogram_image(x: np.ndarray, size: int) -> np.ndarray:
    """Full image pipeline for one window: (C, N) -> (C, size, size).

    STFT magnitude, log compression, bilinear resize, then one
    standardization over the whole image stack so every input sits in a
    comparable numeric range regardless of raw amplitude.
    """
    return standardize_image(bilinear_resize(log_scale(stft_magnitude(x)), size, size))


def downsample(x: np.ndarray, factor: int) -> np.ndarray:
    """Block-mean decimation along the last axis: average each run of
    `factor` samples. Trailing samples that do not fill a block are dropped."""
    if factor < 1 or factor != int(factor):
        raise ValidationError(f"downsample factor must be an integer >= 1, got {factor}")
    if factor == 1:
        return x.astype(np.float32, copy=False)
    n = x.shape[-1]
    if n < factor:
        raise ValidationError(f"signal length {n} shorter than downsample factor {factor}")
    keep = (n // factor) * factor
    blocks = x[..., :keep].reshape(*x.shape[:-1], n // factor, factor)
    return blocks.mean(axis=-1, dtype=np.float64).astype(np.float32)


def compute_stats(windows: list[np.ndarray]) -> ChannelStats:
    """Per-channel mean and std pooled over every sample of every window."""
    if not windows:
        raise ValidationError("cannot compute statistics from zero windows")
    channels = windows[0].shape[0]
    for w in windows:
        if w.ndim != 2 or w.shape[0] != channels:
            raise ValidationError("all windows must be 2-D with the same channel count")
    total = np.zeros(channels, dtype=np.float64)
    total_sq = np.zeros(channels, dtype=np.float64)
    count = 0
    for w in windows:
        w64 = w.astype(np.float64)
        total += w64.sum(axis=1)
        total_sq += (w64 * w64).sum(axis=1)
        count += w.shape[1]
    mean = total / count
    var = np.maximum(total_sq / count - mean * mean, 0.0)
    return ChannelStats(mean=mean.astype(np.float32), std=np.sqrt(var).astype(np.float32))


def standardize(x: np.ndarray, stats: ChannelStats, eps: float = 1e-8) -> np.ndarray:
    """(x - mean) / max(std, eps) per channel; x is (C, N)."""
    if x.shape[0] != stats.mean.shape[0]:
        raise ValidationError(
            f"window has {x.shape[0]} channels but stats describe {stats.mean.shape[0]}"
        )
    denom = np.maximum(stats.std, eps)
    return ((x - stats.mean[:, None]) / denom[:, None]).astype(np.float32)


def standardize_image(img: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Zero-mean unit-variance over all pixels of a single image stack."""
    mean = float(img.mean())
    std = float(img.std())
    return ((img - mean) / max(std, eps)).astype(np.float32)
