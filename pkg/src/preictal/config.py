"""YAML-backed experiment and synthesis configuration."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from preictal.eegio.recording import SeizureAnnotation
from preictal.eegio.synth import SignatureSpec, SynthSpec
from preictal.errors import ValidationError
from preictal.models import ARCHITECTURES
from preictal.pipelines import DEFAULT_SUB_WINDOW_S
from preictal.segmentation import LabelParams
from preictal.training import TrainConfig


@dataclass(frozen=True)
class ExperimentConfig:
    manifest: str
    architecture: str
    mode: str = "supervised"
    grid_search: bool = False
    seed: int = 0
    output_dir: str = "runs/out"
    sub_window_s: float = DEFAULT_SUB_WINDOW_S
    labeling: LabelParams = field(
        default_factory=lambda: LabelParams(window_size_s=30.0, ppl_s=3600.0)
    )
    training: TrainConfig | None = None

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValidationError(
                f"unknown architecture {self.architecture!r}, expected one of {ARCHITECTURES}"
            )
        if self.training is None:
            object.__setattr__(
                self, "training", TrainConfig(architecture=self.architecture, mode=self.mode)
            )

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    def canonical_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest()


def _take(d: dict, allowed: set, context: str) -> dict:
    unknown = set(d) - allowed
    if unknown:
        raise ValidationError(f"unknown {context} keys: {sorted(unknown)}")
    return d


def experiment_config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw or {})
    _take(
        raw,
        {
            "manifest",
            "architecture",
            "mode",
            "grid_search",
            "seed",
            "output_dir",
            "sub_window_s",
            "labeling",
            "training",
        },
        "config",
    )
    for key in ("manifest", "architecture"):
        if key not in raw:
            raise ValidationError(f"config is missing required key {key!r}")

    labeling_raw = dict(raw.get("labeling") or {})
    _take(
        labeling_raw,
        {
            "window_size_s",
            "ppl_s",
            "it_s",
            "d_s",
            "postictal_s",
            "interictal_downsample",
            "min_lead_gap_s",
        },
        "labeling",
    )
    labeling_raw.setdefault("window_size_s", 30.0)
    labeling_raw.setdefault("ppl_s", 3600.0)
    labeling = LabelParams(**labeling_raw)

    training_raw = dict(raw.get("training") or {})
    _take(training_raw, {"epochs", "batch_size", "learning_rate"}, "training")
    mode = raw.get("mode", "supervised")
    training = TrainConfig(architecture=raw["architecture"], mode=mode, **training_raw)

    return ExperimentConfig(
        manifest=str(raw["manifest"]),
        architecture=raw["architecture"],
        mode=mode,
        grid_search=bool(raw.get("grid_search", False)),
        seed=int(raw.get("seed", 0)),
        output_dir=str(raw.get("output_dir", "runs/out")),
        sub_window_s=float(raw.get("sub_window_s", DEFAULT_SUB_WINDOW_S)),
        labeling=labeling,
        training=training,
    )


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValidationError(f"config file {path} must hold a mapping")
    return experiment_config_from_dict(raw)


DEFAULT_SYNTH = {
    "duration_s": 18000.0,
    "channels": 2,
    "sampling_rate": 64.0,
    "seizures": [[3600.0, 3660.0], [8100.0, 8160.0], [12600.0, 12660.0], [17100.0, 17160.0]],
    "signature": {"freq_hz": 20.0, "amplitude": 1.0, "length_s": 3600.0},
    "pink_amplitude": 1.0,
    "white_amplitude": 0.3,
    "ictal_amplitude": 3.0,
    "seed": 0,
}


def synth_spec_from_dict(raw: dict, seed_override: int | None = None) -> SynthSpec:
    raw = dict(raw or {})
    _take(
        raw,
        {
            "duration_s",
            "channels",
            "sampling_rate",
            "seizures",
            "signature",
            "pink_amplitude",
            "white_amplitude",
            "ictal_amplitude",
            "seed",
        },
        "synth spec",
    )
    merged = dict(DEFAULT_SYNTH)
    merged.update(raw)
    sig_raw = dict(merged["signature"])
    _take(sig_raw, {"freq_hz", "amplitude", "length_s"}, "signature")
    seizures = [SeizureAnnotation(float(a), float(b)) for a, b in merged["seizures"]]
    seed = seed_override if seed_override is not None else int(merged["seed"])
    return SynthSpec(
        duration_s=float(merged["duration_s"]),
        channels=int(merged["channels"]),
        sampling_rate=float(merged["sampling_rate"]),
        seizures=seizures,
        signature=SignatureSpec(**{k: float(v) for k, v in sig_raw.items()}),
        seed=seed,
        pink_amplitude=float(merged["pink_amplitude"]),
        white_amplitude=float(merged["white_amplitude"]),
        ictal_amplitude=float(merged["ictal_amplitude"]),
    )


def load_synth_spec(path: str | Path | None, seed_override: int | None = None) -> SynthSpec:
    if path is None:
        return synth_spec_from_dict({}, seed_override)
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValidationError(f"synth spec {path} must hold a mapping")
    return synth_spec_from_dict(raw, seed_override)
