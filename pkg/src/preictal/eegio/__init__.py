"""EEG ingestion: EDF and raw-binary parsers, CHB-MIT annotations, synthesis."""

from preictal.eegio.recording import Recording, SeizureAnnotation, validate_annotations
from preictal.eegio.edf import parse_edf, write_edf
from preictal.eegio.rawbin import read_raw_binary, write_raw_binary
from preictal.eegio.chbmit import parse_chbmit_summary
from preictal.eegio.synth import SignatureSpec, SynthSpec, synthesize_recording
from preictal.eegio.manifest import DatasetManifest, RecordingEntry, Timeline, load_timeline

__all__ = [
    "Recording",
    "SeizureAnnotation",
    "validate_annotations",
    "parse_edf",
    "write_edf",
    "read_raw_binary",
    "write_raw_binary",
    "parse_chbmit_summary",
    "SignatureSpec",
    "SynthSpec",
    "synthesize_recording",
    "DatasetManifest",
    "RecordingEntry",
    "Timeline",
    "load_timeline",
]
