"""European Data Format reader/writer.

Layout per the public EDF specification: a 256-byte ASCII main header, one
256-byte header per signal (stored field-major), then data records of
little-endian 16-bit two's-complement samples. "EDF Annotations" signals are
skipped; seizure times for CHB-MIT come from the summary sidecar instead.
"""

from __future__ import annotations

import numpy as np

from preictal.eegio.recording import Recording
from preictal.errors import ParseError, TruncationError, ValidationError

ANNOTATION_LABEL = "EDF Annotations"

# (name, width) of the main header fields, in file order
_MAIN_FIELDS = [
    ("version", 8),
    ("patient_id", 80),
    ("recording_id", 80),
    ("start_date", 8),
    ("start_time", 8),
    ("header_bytes", 8),
    ("reserved", 44),
    ("n_records", 8),
    ("record_duration", 8),
    ("n_signals", 4),
]

# (name, width) of the per-signal fields; each is stored as n_signals
# consecutive slots of the given width
_SIGNAL_FIELDS = [
    ("label", 16),
    ("transducer", 80),
    ("dimension", 8),
    ("physical_min", 8),
    ("physical_max", 8),
    ("digital_min", 8),
    ("digital_max", 8),
    ("prefilter", 80),
    ("samples_per_record", 8),
    ("reserved", 32),
]


def _ascii_field(raw: bytes, offset: int, name: str) -> str:
    try:
        return raw.decode("ascii").strip()
    except UnicodeDecodeError:
        raise ParseError(f"EDF header field '{name}' is not ASCII", offset=offset) from None


def _int_field(raw: bytes, offset: int, name: str) -> int:
    text = _ascii_field(raw, offset, name)
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"EDF header field '{name}' is not an integer: {text!r}", offset=offset) from None


def _float_field(raw: bytes, offset: int, name: str) -> float:
    text = _ascii_field(raw, offset, name)
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"EDF header field '{name}' is not a number: {text!r}", offset=offset) from None


def parse_edf(data: bytes) -> Recording:
    """Parse EDF bytes into a Recording in physical units.

    Raises ParseError for malformed header fields (with the byte offset),
    TruncationError when the data records end early, and ValidationError for
    structurally valid files the toolkit cannot represent (mixed sampling
    rates, no EEG signals).
    """
    if len(data) < 256:
        raise TruncationError(f"EDF main header needs 256 bytes, file holds {len(data)}")

    header = {}
    pos = 0
    for name, width in _MAIN_FIELDS:
        header[name] = (data[pos : pos + width], pos)
        pos += width

    n_signals = _int_field(*header["n_signals"], "n_signals")
    if n_signals < 1:
        raise ParseError(f"EDF declares {n_signals} signals", offset=header["n_signals"][1])
    n_records = _int_field(*header["n_records"], "n_records")
    record_duration = _float_field(*header["record_duration"], "record_duration")
    header_bytes = _int_field(*header["header_bytes"], "header_bytes")

    expected_header = 256 + 256 * n_signals
    if header_bytes != expected_header:
        raise ParseError(
            f"EDF header size field says {header_bytes}, expected {expected_header}",
            offset=header["header_bytes"][1],
        )
    if len(data) < expected_header:
        raise TruncationError(
            f"EDF signal headers need {expected_header} bytes, file holds {len(data)}"
        )

    sig: dict[str, list] = {name: [] for name, _ in _SIGNAL_FIELDS}
    pos = 256
    for name, width in _SIGNAL_FIELDS:
        for i in range(n_signals):
            raw = data[pos : pos + width]
            field_name = f"{name}[{i}]"
            if name == "label":
                sig[name].append(_ascii_field(raw, pos, field_name))
            elif name in ("physical_min", "physical_max"):
                sig[name].append(_float_field(raw, pos, field_name))
            elif name in ("digital_min", "digital_max", "samples_per_record"):
                sig[name].append(_int_field(raw, pos, field_name))
            else:
                sig[name].append(raw)
            pos += width

    record_size = 2 * sum(sig["samples_per_record"])
    if record_size == 0:
        raise ParseError("EDF declares zero samples per record for every signal", offset=256)
    body = len(data) - expected_header
    available = body // record_size
    if n_records < 0:  # length unknown at write time; infer from the file size
        n_records = available
        if body % record_size != 0:
            raise TruncationError(
                f"EDF body holds {available} records plus {body % record_size} stray bytes"
            )
    elif available < n_records:
        raise TruncationError(f"EDF declares {n_records} data records, file holds {available}")

    keep = [i for i in range(n_signals) if sig["label"][i] != ANNOTATION_LABEL]
    if not keep:
        raise ValidationError("EDF contains no signals besides annotations")
    spr = {sig["samples_per_record"][i] for i in keep}
    if len(spr) > 1:
        raise ValidationError(f"EDF signals have mixed samples-per-record {sorted(spr)}; not supported")
    samples_per_record = spr.pop()
    if samples_per_record < 1:
        raise ValidationError("EDF kept signals declare zero samples per record")
    if record_duration <= 0:
        raise ParseError(
            f"EDF record duration must be positive, got {record_duration}",
            offset=header["record_duration"][1],
        )

    raw = np.frombuffer(
        data, dtype="<i2", count=n_records * record_size // 2, offset=expected_header
    ).reshape(n_records, record_size // 2)

    offsets = np.cumsum([0] + sig["samples_per_record"])
    out = np.empty((len(keep), n_records * samples_per_record), dtype=np.float32)
    for row, i in enumerate(keep):
        dmin, dmax = sig["digital_min"][i], sig["digital_max"][i]
        pmin, pmax = sig["physical_min"][i], sig["physical_max"][i]
        if dmax == dmin:
            raise ValidationError(f"signal {i} has degenerate digital range [{dmin}, {dmax}]")
        scale = (pmax - pmin) / (dmax - dmin)
        digital = raw[:, offsets[i] : offsets[i + 1]].reshape(-1)
        out[row] = digital.astype(np.float64) * scale + (pmin - dmin * scale)

    return Recording(
        sampling_rate=samples_per_record / record_duration,
        data=out,
        channel_labels=[sig["label"][i] for i in keep],
    )


def _pad(text: str, width: int) -> bytes:
    raw = text.encode("ascii")
    if len(raw) > width:
        raw = raw[:width]
    return raw.ljust(width)


def _num(value, width: int) -> bytes:
    text = f"{value:.{width - 1}g}" if isinstance(value, float) else str(value)
    raw = text.encode("ascii")
    if len(raw) > width:
        raise ValidationError(f"value {value!r} does not fit an EDF {width}-char field")
    return raw.ljust(width)


def _fit_float(value: float, width: int = 8) -> float:
    """Round value to the nearest float expressible in an EDF ASCII field."""
    for precision in range(width - 1, 0, -1):
        text = f"{value:.{precision}g}"
        if len(text) <= width:
            return float(text)
    raise ValidationError(f"cannot express {value!r} in {width} ASCII chars")


def _physical_range(samples: np.ndarray) -> tuple[float, float]:
    """Pick an 8-char-expressible physical range that covers the samples."""
    pmin = float(samples.min()) if samples.size else -1.0
    pmax = float(samples.max()) if samples.size else 1.0
    if pmin == pmax:  # constant channels still need a nonzero span
        pmin -= 1.0
        pmax += 1.0
    margin = 1e-3 * (pmax - pmin)
    while True:
        lo = _fit_float(pmin - margin)
        hi = _fit_float(pmax + margin)
        if lo <= pmin and hi >= pmax and lo < hi:
            return lo, hi
        margin *= 4.0


def write_edf(recording: Recording, patient_id: str = "X", recording_id: str = "X") -> bytes:
    """Serialize a Recording as EDF, one-second records, 16-bit quantization.

    Quantizes each channel over its own physical range; parse_edf(write_edf(r))
    reproduces samples within one digital quantization step. The sampling rate
    must be a positive integer and the sample count a whole number of records.
    """
    f = recording.sampling_rate
    if f != int(f) or f < 1:
        raise ValidationError(f"EDF writer needs an integer sampling rate, got {f}")
    spr = int(f)
    if recording.duration_samples % spr != 0:
        raise ValidationError(
            f"{recording.duration_samples} samples is not a whole number of 1 s records at {spr} Hz"
        )
    n_records = recording.duration_samples // spr
    n_signals = recording.channels

    dig_min, dig_max = -32768, 32767
    phys_min, phys_max, digital = [], [], []
    for ch in range(n_signals):
        samples = recording.data[ch].astype(np.float64)
        # quantize against the range exactly as it survives the 8-char ASCII
        # field, so the reader reconstructs with the very numbers used here
        pmin, pmax = _physical_range(samples)
        phys_min.append(pmin)
        phys_max.append(pmax)
        scale = (pmax - pmin) / (dig_max - dig_min)
        dig = np.round((samples - pmin) / scale + dig_min)
        digital.append(np.clip(dig, dig_min, dig_max).astype("<i2").reshape(n_records, spr))

    parts = [
        _pad("0", 8),
        _pad(patient_id, 80),
        _pad(recording_id, 80),
        _pad("01.01.00", 8),
        _pad("00.00.00", 8),
        _num(256 + 256 * n_signals, 8),
        _pad("", 44),
        _num(n_records, 8),
        _num(1, 8),
        _num(n_signals, 4),
    ]
    parts += [_pad(label, 16) for label in recording.channel_labels]
    parts += [_pad("", 80)] * n_signals
    parts += [_pad("uV", 8)] * n_signals
    parts += [_num(v, 8) for v in phys_min]
    parts += [_num(v, 8) for v in phys_max]
    parts += [_num(dig_min, 8)] * n_signals
    parts += [_num(dig_max, 8)] * n_signals
    parts += [_pad("", 80)] * n_signals
    parts += [_num(spr, 8)] * n_signals
    parts += [_pad("", 32)] * n_signals

    records = np.stack(digital, axis=1) if n_signals else np.empty((n_records, 0, spr))
    return b"".join(parts) + records.tobytes()
