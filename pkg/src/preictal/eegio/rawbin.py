"""Raw-binary intermediate format for converted recordings.

Layout, all little-endian: magic "EEGR", u16 version (=1), u16 channel count,
f64 sampling rate, u64 samples per channel, then float32 samples
channel-major. Round-trips Recording values bit-exactly (data is float32).
"""

from __future__ import annotations

import struct

import numpy as np

from preictal.eegio.recording import Recording
from preictal.errors import FormatError, TruncationError, ValidationError

MAGIC = b"EEGR"
VERSION = 1
_HEADER = struct.Struct("<4sHHdQ")


def write_raw_binary(recording: Recording) -> bytes:
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        recording.channels,
        recording.sampling_rate,
        recording.duration_samples,
    )
    return header + np.ascontiguousarray(recording.data, dtype="<f4").tobytes()


def read_raw_binary(data: bytes, channel_labels: list[str] | None = None) -> Recording:
    if len(data) < _HEADER.size:
        raise TruncationError(
            f"raw-binary header needs {_HEADER.size} bytes, file holds {len(data)}"
        )
    magic, version, channels, rate, samples = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported raw-binary version {version}")
    if channels < 1:
        raise ValidationError(f"raw-binary declares {channels} channels")

    expected = channels * samples * 4
    body = len(data) - _HEADER.size
    if body < expected:
        raise TruncationError(
            f"raw-binary declares {samples} samples/channel "
            f"({expected} bytes), file holds {body}"
        )
    values = np.frombuffer(data, dtype="<f4", count=channels * samples, offset=_HEADER.size)
    return Recording(
        sampling_rate=rate,
        data=values.reshape(channels, samples).copy(),
        channel_labels=list(channel_labels) if channel_labels else [],
    )
