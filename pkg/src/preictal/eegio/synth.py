"""Synthetic EEG generator for desk-scale experiments.

Baseline is seeded pink-plus-white noise per channel; a sinusoidal band
signature is added during a configurable span before each scheduled seizure
so that preictal windows are separable from interictal ones. Identical seeds
produce bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from preictal.eegio.recording import Recording, SeizureAnnotation, validate_annotations
from preictal.errors import ValidationError


@dataclass(frozen=True)
class SignatureSpec:
    """Sinusoid injected before each seizure onset."""

    freq_hz: float
    amplitude: float
    length_s: float

    def __post_init__(self):
        if self.freq_hz <= 0 or self.length_s < 0 or self.amplitude < 0:
            raise ValidationError(f"invalid signature spec {self}")


@dataclass
class SynthSpec:
    """Seizure entries may be (onset_s, offset_s) pairs or SeizureAnnotation."""

    duration_s: float
    channels: int
    sampling_rate: float
    seizures: list = field(default_factory=list)
    signature: SignatureSpec | None = None
    seed: int = 0
    pink_amplitude: float = 1.0
    white_amplitude: float = 0.3
    ictal_amplitude: float = 3.0


def _pink_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    """Unit-variance 1/f noise via spectral shaping of seeded white noise."""
    white = rng.standard_normal(n)
    if n < 2:
        return white
    spectrum = np.fft.rfft(white)
    k = np.arange(spectrum.shape[0], dtype=np.float64)
    k[0] = 1.0
    spectrum /= np.sqrt(k)
    pink = np.fft.irfft(spectrum, n=n)
    std = pink.std()
    return pink / std if std > 0 else pink


def synthesize_recording(spec: SynthSpec) -> tuple[Recording, list[SeizureAnnotation]]:
    """Generate a Recording plus the annotations echoing the schedule."""
    f = spec.sampling_rate
    if spec.duration_s <= 0 or spec.channels < 1 or f <= 0:
        raise ValidationError(f"invalid synthesis spec {spec}")
    annotations = [
        s if isinstance(s, SeizureAnnotation) else SeizureAnnotation(onset_s=s[0], offset_s=s[1])
        for s in spec.seizures
    ]
    try:
        validate_annotations(annotations, duration_s=spec.duration_s)
    except ValidationError as exc:
        raise ValidationError(f"bad seizure schedule: {exc}") from exc
    if spec.signature is not None and spec.signature.freq_hz >= f / 2:
        raise ValidationError(
            f"signature frequency {spec.signature.freq_hz} Hz at or above Nyquist ({f / 2} Hz)"
        )

    n = int(round(spec.duration_s * f))
    rng = np.random.default_rng(spec.seed)
    t = np.arange(n, dtype=np.float64) / f

    data = np.empty((spec.channels, n), dtype=np.float64)
    for ch in range(spec.channels):
        data[ch] = spec.pink_amplitude * _pink_noise(rng, n)
        data[ch] += spec.white_amplitude * rng.standard_normal(n)

    # ictal spans get a loud low-frequency burst so they look nothing like
    # baseline; segmentation never labels them for training anyway
    for ann in annotations:
        a, b = int(round(ann.onset_s * f)), int(round(ann.offset_s * f))
        for ch in range(spec.channels):
            phase = rng.uniform(0, 2 * np.pi)
            data[ch, a:b] += spec.ictal_amplitude * np.sin(2 * np.pi * 4.0 * t[a:b] + phase)

    if spec.signature is not None:
        sig = spec.signature
        for ann in annotations:
            a = max(0, int(round((ann.onset_s - sig.length_s) * f)))
            b = int(round(ann.onset_s * f))
            for ch in range(spec.channels):
                phase = rng.uniform(0, 2 * np.pi)
                data[ch, a:b] += sig.amplitude * np.sin(2 * np.pi * sig.freq_hz * t[a:b] + phase)

    recording = Recording(sampling_rate=f, data=data.astype(np.float32))
    return recording, annotations
