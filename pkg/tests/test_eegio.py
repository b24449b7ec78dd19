"""Tests for EDF and raw-binary parsing, CHB-MIT summaries, synthesis, and
timeline stitching."""

import numpy as np
import numpy.testing as npt
import pytest

from preictal.eegio.chbmit import parse_chbmit_summary
from preictal.eegio.edf import parse_edf, write_edf
from preictal.eegio.manifest import DatasetManifest, RecordingEntry, Timeline, load_timeline
from preictal.eegio.rawbin import read_raw_binary, write_raw_binary
from preictal.eegio.recording import Recording, SeizureAnnotation, validate_annotations
from preictal.eegio.synth import SignatureSpec, SynthSpec, synthesize_recording
from preictal.errors import (
    FormatError,
    ParseError,
    TruncationError,
    ValidationError,
)


def random_recording(rng, channels=None, rate=None, seconds=None) -> Recording:
    channels = channels or int(rng.integers(1, 5))
    rate = rate or int(rng.choice([64, 128, 256]))
    seconds = seconds or int(rng.integers(1, 6))
    scale = float(rng.uniform(0.5, 200.0))
    data = rng.standard_normal((channels, rate * seconds)) * scale + rng.uniform(-50, 50)
    return Recording(sampling_rate=rate, data=data.astype(np.float32))


# ---- EDF ----


def build_edf(signals, spr, n_records, dig, phys, labels=None, header_records=None):
    """Independent EDF byte builder used as the parse oracle."""
    n_sig = len(signals)
    labels = labels or [f"sig{i}" for i in range(n_sig)]
    header_records = n_records if header_records is None else header_records

    def pad(text, width):
        return str(text).encode("ascii").ljust(width)[:width]

    head = b"".join(
        [
            pad("0", 8),
            pad("patient", 80),
            pad("rec", 80),
            pad("01.01.00", 8),
            pad("00.00.00", 8),
            pad(256 + 256 * n_sig, 8),
            pad("", 44),
            pad(header_records, 8),
            pad(1, 8),
            pad(n_sig, 4),
        ]
    )
    per = b""
    per += b"".join(pad(lbl, 16) for lbl in labels)
    per += b"".join(pad("", 80) for _ in range(n_sig))
    per += b"".join(pad("uV", 8) for _ in range(n_sig))
    per += b"".join(pad(phys[i][0], 8) for i in range(n_sig))
    per += b"".join(pad(phys[i][1], 8) for i in range(n_sig))
    per += b"".join(pad(dig[i][0], 8) for i in range(n_sig))
    per += b"".join(pad(dig[i][1], 8) for i in range(n_sig))
    per += b"".join(pad("", 80) for _ in range(n_sig))
    per += b"".join(pad(spr, 8) for _ in range(n_sig))
    per += b"".join(pad("", 32) for _ in range(n_sig))

    body = b""
    for r in range(n_records):
        for sig in signals:
            body += sig[r * spr : (r + 1) * spr].astype("<i2").tobytes()
    return head + per + body


def test_edf_round_trip_within_one_quant_step():
    rng = np.random.default_rng(42)
    for _ in range(10):
        rec = random_recording(rng)
        parsed = parse_edf(write_edf(rec))
        assert parsed.channels == rec.channels
        assert parsed.sampling_rate == rec.sampling_rate
        assert parsed.duration_samples == rec.duration_samples
        for ch in range(rec.channels):
            lo = float(parsed.data[ch].min())
            hi = float(parsed.data[ch].max())
            step = (hi - lo) / 65535 if hi > lo else 1e-6
            err = np.abs(parsed.data[ch].astype(np.float64) - rec.data[ch].astype(np.float64))
            assert err.max() <= step * 1.0001


def test_edf_identity_linear_map():
    # digital range equal to physical range with zero offset: values pass through
    rng = np.random.default_rng(0)
    raw = rng.integers(-32768, 32767, size=2 * 256).astype("<i2")
    data = build_edf(
        [raw[:256], raw[256:]],
        spr=128,
        n_records=2,
        dig=[(-32768, 32767)] * 2,
        phys=[(-32768, 32767)] * 2,
    )
    rec = parse_edf(data)
    assert rec.sampling_rate == 128
    npt.assert_array_equal(rec.data[0], raw[:256].astype(np.float32))
    npt.assert_array_equal(rec.data[1], raw[256:].astype(np.float32))


def test_edf_physical_scaling():
    # digital [0, 100] mapped onto physical [0, 200]: doubling
    raw = np.arange(0, 100, dtype="<i2")
    data = build_edf([raw], spr=50, n_records=2, dig=[(0, 100)], phys=[(0, 200)])
    rec = parse_edf(data)
    npt.assert_allclose(rec.data[0], raw.astype(np.float32) * 2.0, rtol=1e-6)


def test_edf_truncated_mid_record():
    raw = np.zeros(512, dtype="<i2")
    data = build_edf([raw], spr=256, n_records=2, dig=[(-100, 100)], phys=[(-1, 1)])
    with pytest.raises(TruncationError):
        parse_edf(data[:-10])


def test_edf_short_header():
    with pytest.raises(TruncationError):
        parse_edf(b"0" * 100)


def test_edf_bad_header_field_names_offset():
    raw = np.zeros(256, dtype="<i2")
    data = bytearray(build_edf([raw], spr=256, n_records=1, dig=[(-100, 100)], phys=[(-1, 1)]))
    data[236:244] = b"notanum "  # the n_records field
    with pytest.raises(ParseError, match="byte offset 236"):
        parse_edf(bytes(data))


def test_edf_non_ascii_header():
    raw = np.zeros(256, dtype="<i2")
    data = bytearray(build_edf([raw], spr=256, n_records=1, dig=[(-100, 100)], phys=[(-1, 1)]))
    data[252] = 0xFF  # inside n_signals
    with pytest.raises(ParseError):
        parse_edf(bytes(data))


def test_edf_annotation_signal_dropped():
    raw = np.arange(128, dtype="<i2")
    ann = np.zeros(128, dtype="<i2")
    data = build_edf(
        [raw, ann],
        spr=128,
        n_records=1,
        dig=[(-32768, 32767)] * 2,
        phys=[(-32768, 32767)] * 2,
        labels=["C3", "EDF Annotations"],
    )
    rec = parse_edf(data)
    assert rec.channels == 1
    assert rec.channel_labels == ["C3"]
    npt.assert_array_equal(rec.data[0], raw.astype(np.float32))


def test_edf_unknown_record_count_inferred():
    raw = np.zeros(512, dtype="<i2")
    data = build_edf(
        [raw], spr=256, n_records=2, dig=[(-100, 100)], phys=[(-1, 1)], header_records=-1
    )
    rec = parse_edf(data)
    assert rec.duration_samples == 512


def test_edf_writer_rejects_fractional_setup():
    rec = Recording(sampling_rate=256, data=np.zeros((1, 300), dtype=np.float32))
    with pytest.raises(ValidationError):
        write_edf(rec)  # 300 samples is not a whole number of 1 s records
    rec = Recording(sampling_rate=0.5, data=np.zeros((1, 1), dtype=np.float32))
    with pytest.raises(ValidationError):
        write_edf(rec)


def test_edf_constant_channel_round_trips():
    rec = Recording(sampling_rate=64, data=np.full((1, 64), 7.25, dtype=np.float32))
    parsed = parse_edf(write_edf(rec))
    npt.assert_allclose(parsed.data, rec.data, atol=1e-3)


# ---- raw binary ----


def test_rawbin_round_trip_bit_exact():
    rng = np.random.default_rng(7)
    for _ in range(10):
        rec = random_recording(rng)
        back = read_raw_binary(write_raw_binary(rec), channel_labels=rec.channel_labels)
        assert back.sampling_rate == rec.sampling_rate
        assert back.channel_labels == rec.channel_labels
        npt.assert_array_equal(back.data, rec.data)
        assert back.data.tobytes() == rec.data.tobytes()


def test_rawbin_empty_data():
    rec = Recording(sampling_rate=256, data=np.zeros((1, 0), dtype=np.float32))
    back = read_raw_binary(write_raw_binary(rec))
    assert back.channels == 1
    assert back.duration_samples == 0
    assert back.sampling_rate == 256


def test_rawbin_truncation():
    rec = Recording(sampling_rate=256, data=np.zeros((1, 1000), dtype=np.float32))
    data = write_raw_binary(rec)
    with pytest.raises(TruncationError):
        read_raw_binary(data[: len(data) - 2000])  # half the samples missing


def test_rawbin_bad_magic():
    rec = Recording(sampling_rate=256, data=np.zeros((1, 4), dtype=np.float32))
    data = b"XXXX" + write_raw_binary(rec)[4:]
    with pytest.raises(FormatError):
        read_raw_binary(data)


def test_rawbin_bad_version():
    rec = Recording(sampling_rate=256, data=np.zeros((1, 4), dtype=np.float32))
    data = bytearray(write_raw_binary(rec))
    data[4] = 99
    with pytest.raises(FormatError):
        read_raw_binary(bytes(data))


def test_rawbin_short_header():
    with pytest.raises(TruncationError):
        read_raw_binary(b"EEGR")


# ---- CHB-MIT summaries ----

SUMMARY = """\
Data Sampling Rate: 256 Hz

File Name: chb01_03.edf
File Start Time: 13:43:04
File End Time: 14:43:04
Number of Seizures in File: 1
Seizure Start Time: 2996 seconds
Seizure End Time: 3036 seconds

File Name: chb01_04.edf
Number of Seizures in File: 0

File Name: chb01_15.edf
Number of Seizures in File: 2
Seizure 1 Start Time: 1732 seconds
Seizure 1 End Time: 1772 seconds
Seizure 2 Start Time: 2000 seconds
Seizure 2 End Time: 2100 seconds
"""


def test_chbmit_summary_parses_fixture():
    result = parse_chbmit_summary(SUMMARY)
    assert set(result) == {"chb01_03.edf", "chb01_04.edf", "chb01_15.edf"}
    assert [(a.onset_s, a.offset_s) for a in result["chb01_03.edf"]] == [(2996.0, 3036.0)]
    assert result["chb01_04.edf"] == []
    assert [(a.onset_s, a.offset_s) for a in result["chb01_15.edf"]] == [
        (1732.0, 1772.0),
        (2000.0, 2100.0),
    ]


def test_chbmit_end_before_start():
    text = (
        "File Name: a.edf\nNumber of Seizures in File: 1\n"
        "Seizure Start Time: 100 seconds\nSeizure End Time: 50 seconds\n"
    )
    with pytest.raises(ValidationError):
        parse_chbmit_summary(text)


def test_chbmit_count_mismatch():
    text = "File Name: a.edf\nNumber of Seizures in File: 2\nSeizure Start Time: 10 seconds\nSeizure End Time: 20 seconds\n"
    with pytest.raises(ValidationError, match="declares 2"):
        parse_chbmit_summary(text)


def test_chbmit_time_before_any_block():
    with pytest.raises(ValidationError):
        parse_chbmit_summary("Seizure Start Time: 10 seconds\n")


# ---- synthesis ----


def test_synth_deterministic():
    spec = SynthSpec(
        duration_s=60.0,
        channels=2,
        sampling_rate=128.0,
        seizures=[(30.0, 35.0)],
        signature=SignatureSpec(freq_hz=10.0, amplitude=1.0, length_s=20.0),
        seed=7,
    )
    rec_a, ann_a = synthesize_recording(spec)
    rec_b, ann_b = synthesize_recording(spec)
    npt.assert_array_equal(rec_a.data, rec_b.data)
    assert ann_a == ann_b


def test_synth_schedule_echo():
    spec = SynthSpec(
        duration_s=7200.0,
        channels=1,
        sampling_rate=64.0,
        seizures=[(2400.0, 2460.0), (4800.0, 4860.0), (7100.0, 7160.0)],
        signature=SignatureSpec(freq_hz=20.0, amplitude=1.0, length_s=600.0),
        seed=1,
    )
    _, anns = synthesize_recording(spec)
    assert [(a.onset_s, a.offset_s) for a in anns] == [
        (2400.0, 2460.0),
        (4800.0, 4860.0),
        (7100.0, 7160.0),
    ]


def test_synth_zero_amplitude_matches_no_signature():
    base = dict(duration_s=30.0, channels=2, sampling_rate=128.0, seizures=[(20.0, 25.0)], seed=3)
    rec_none, _ = synthesize_recording(SynthSpec(**base, signature=None))
    rec_zero, _ = synthesize_recording(
        SynthSpec(**base, signature=SignatureSpec(freq_hz=10.0, amplitude=0.0, length_s=10.0))
    )
    npt.assert_array_equal(rec_none.data, rec_zero.data)


def test_synth_signature_raises_band_power():
    spec = SynthSpec(
        duration_s=600.0,
        channels=1,
        sampling_rate=128.0,
        seizures=[(500.0, 510.0)],
        signature=SignatureSpec(freq_hz=20.0, amplitude=1.0, length_s=200.0),
        seed=5,
    )
    rec, _ = synthesize_recording(spec)

    def band_power(seg):
        spectrum = np.abs(np.fft.rfft(seg)) ** 2
        freqs = np.fft.rfftfreq(seg.size, 1 / 128.0)
        return spectrum[(freqs > 19) & (freqs < 21)].sum() / spectrum.sum()

    preictal = rec.data[0, int(350 * 128) : int(450 * 128)]
    interictal = rec.data[0, int(50 * 128) : int(150 * 128)]
    assert band_power(preictal) > 10 * band_power(interictal)


def test_synth_rejects_bad_schedules():
    with pytest.raises(ValidationError):
        synthesize_recording(
            SynthSpec(duration_s=100.0, channels=1, sampling_rate=64.0, seizures=[(50.0, 120.0)])
        )
    with pytest.raises(ValidationError):
        synthesize_recording(
            SynthSpec(
                duration_s=100.0,
                channels=1,
                sampling_rate=64.0,
                seizures=[(10.0, 30.0), (20.0, 40.0)],
            )
        )
    with pytest.raises(ValidationError, match="Nyquist"):
        synthesize_recording(
            SynthSpec(
                duration_s=10.0,
                channels=1,
                sampling_rate=64.0,
                signature=SignatureSpec(freq_hz=40.0, amplitude=1.0, length_s=5.0),
            )
        )


# ---- annotations and manifests ----


def test_annotation_validation():
    with pytest.raises(ValidationError):
        SeizureAnnotation(onset_s=10.0, offset_s=5.0)
    with pytest.raises(ValidationError):
        SeizureAnnotation(onset_s=-1.0, offset_s=5.0)
    anns = [SeizureAnnotation(0.0, 10.0), SeizureAnnotation(5.0, 15.0)]
    with pytest.raises(ValidationError):
        validate_annotations(anns)
    with pytest.raises(ValidationError):
        validate_annotations([SeizureAnnotation(0.0, 10.0)], duration_s=5.0)


def test_manifest_json_round_trip():
    manifest = DatasetManifest(
        patient_id="p01",
        recordings=[
            RecordingEntry(path="a.eegr", format="eegr", start_s=0.0),
            RecordingEntry(path="b.eegr", format="eegr", start_s=3600.0),
        ],
        annotations=[SeizureAnnotation(100.0, 160.0)],
    )
    back = DatasetManifest.from_json(manifest.to_json())
    assert back == manifest


def test_manifest_unsorted_recordings():
    with pytest.raises(ValidationError):
        DatasetManifest(
            patient_id="p",
            recordings=[
                RecordingEntry(path="b", format="eegr", start_s=100.0),
                RecordingEntry(path="a", format="eegr", start_s=0.0),
            ],
        )


def make_rec(seconds, rate=64, channels=1, seed=0):
    rng = np.random.default_rng(seed)
    return Recording(
        sampling_rate=rate,
        data=rng.standard_normal((channels, int(seconds * rate))).astype(np.float32),
    )


def test_timeline_gaps_and_extract():
    timeline = Timeline(
        patient_id="p",
        segments=[(0.0, make_rec(10)), (20.0, make_rec(10, seed=1))],
    )
    assert timeline.duration_s == 30.0
    assert timeline.coverage() == [(0.0, 10.0), (20.0, 30.0)]
    assert timeline.gaps() == [(10.0, 20.0)]

    window = timeline.extract(22.0, 64)
    npt.assert_array_equal(window, timeline.segments[1][1].data[:, 128:192])
    with pytest.raises(ValidationError):
        timeline.extract(9.5, 64)  # straddles the gap
    with pytest.raises(ValidationError):
        timeline.extract(29.5, 64)  # runs past the end


def test_timeline_rejects_overlap_and_mixed_rates():
    with pytest.raises(ValidationError):
        Timeline(patient_id="p", segments=[(0.0, make_rec(10)), (5.0, make_rec(10))])
    with pytest.raises(ValidationError):
        Timeline(
            patient_id="p",
            segments=[(0.0, make_rec(10, rate=64)), (10.0, make_rec(10, rate=128))],
        )


def test_load_timeline_from_disk(tmp_path):
    rec_a = make_rec(4, seed=2)
    rec_b = make_rec(4, seed=3)
    (tmp_path / "a.eegr").write_bytes(write_raw_binary(rec_a))
    (tmp_path / "b.eegr").write_bytes(write_raw_binary(rec_b))
    (tmp_path / "c.edf").write_bytes(write_edf(rec_b))
    manifest = DatasetManifest(
        patient_id="p",
        recordings=[
            RecordingEntry(path="a.eegr", format="eegr", start_s=0.0),
            RecordingEntry(path="b.eegr", format="eegr", start_s=4.0),
            RecordingEntry(path="c.edf", format="edf", start_s=10.0),
        ],
        annotations=[SeizureAnnotation(1.0, 2.0)],
    )
    timeline = load_timeline(manifest, tmp_path)
    assert timeline.duration_s == 14.0
    assert timeline.gaps() == [(8.0, 10.0)]
    npt.assert_array_equal(timeline.extract(4.0, 64), rec_b.data[:, :64])


def test_load_timeline_unknown_format(tmp_path):
    (tmp_path / "a.bin").write_bytes(b"1234")
    manifest = DatasetManifest(
        patient_id="p",
        recordings=[RecordingEntry(path="a.bin", format="mat", start_s=0.0)],
    )
    with pytest.raises(FormatError):
        load_timeline(manifest, tmp_path)
