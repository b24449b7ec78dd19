"""Command-line interface.

Subcommands:
  convert  EDF files -> raw-binary intermediates plus a manifest stub
  synth    generate a synthetic patient dataset from a spec file
  run      full experiment from a config file (fixed or grid-searched)
  report   turn a finished run directory into plot-ready CSV/SVG files
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import yaml

import preictal
from preictal import report as report_mod
from preictal.config import (
    ExperimentConfig,
    load_experiment_config,
    load_synth_spec,
)
from preictal.eegio.edf import parse_edf
from preictal.eegio.manifest import DatasetManifest, RecordingEntry, load_timeline
from preictal.eegio.rawbin import write_raw_binary
from preictal.eegio.synth import synthesize_recording
from preictal.errors import FormatError, PreictalError
from preictal.experiment import grid_search, run_fixed
from preictal.models import save_model


def _fmt(value: float) -> str:
    return f"{value:.10g}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_convert(args) -> int:
    inputs: list[Path] = []
    for item in args.inputs:
        p = Path(item)
        if p.is_dir():
            inputs.extend(sorted(p.glob("*.edf")))
        else:
            inputs.append(p)
    if not inputs:
        raise FormatError("no input files found")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0.0
    for path in inputs:
        if path.suffix.lower() != ".edf":
            raise FormatError(f"unsupported input format {path.suffix!r} for {path}")
        recording = parse_edf(path.read_bytes())
        out_name = path.stem + ".eegr"
        (out_dir / out_name).write_bytes(write_raw_binary(recording))
        entries.append(RecordingEntry(path=out_name, format="eegr", start_s=offset))
        offset += recording.duration_s
        print(f"converted {path} -> {out_dir / out_name}")

    manifest = DatasetManifest(patient_id=out_dir.name, recordings=entries, annotations=[])
    (out_dir / "manifest.json").write_text(manifest.to_json())
    print(f"wrote manifest for {len(entries)} recording(s)")
    return 0


def cmd_synth(args) -> int:
    spec = load_synth_spec(args.spec, seed_override=args.seed)
    recording, annotations = synthesize_recording(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "recording.eegr").write_bytes(write_raw_binary(recording))
    manifest = DatasetManifest(
        patient_id=out_dir.name,
        recordings=[RecordingEntry(path="recording.eegr", format="eegr", start_s=0.0)],
        annotations=annotations,
    )
    (out_dir / "manifest.json").write_text(manifest.to_json())
    resolved = {
        "duration_s": spec.duration_s,
        "channels": spec.channels,
        "sampling_rate": spec.sampling_rate,
        "seizures": [[a.onset_s, a.offset_s] for a in spec.seizures],
        "signature": {
            "freq_hz": spec.signature.freq_hz,
            "amplitude": spec.signature.amplitude,
            "length_s": spec.signature.length_s,
        },
        "pink_amplitude": spec.pink_amplitude,
        "white_amplitude": spec.white_amplitude,
        "ictal_amplitude": spec.ictal_amplitude,
        "seed": spec.seed,
    }
    (out_dir / "synth_spec.yaml").write_text(yaml.safe_dump(resolved, sort_keys=True))
    print(f"synthesized {spec.duration_s:.0f}s x {spec.channels}ch at {spec.sampling_rate:g} Hz "
          f"with {len(annotations)} seizures into {out_dir}")
    return 0


def _result_rows(patient: str, cfg: ExperimentConfig, cells, test_eval, selected) -> list[list]:
    rows = []
    for cell in cells:
        for fold in cell.cv.folds:
            rows.append(
                [
                    patient,
                    cfg.architecture,
                    cfg.mode,
                    _fmt(cell.window_s),
                    _fmt(cell.ppl_s),
                    str(fold.fold_seizure),
                    _fmt(fold.auc_roc),
                    _fmt(fold.auc_pr),
                ]
            )
    rows.append(
        [
            patient,
            cfg.architecture,
            cfg.mode,
            _fmt(selected[0]),
            _fmt(selected[1]),
            "test",
            _fmt(test_eval.auc_roc),
            _fmt(test_eval.auc_pr),
        ]
    )
    return rows


def cmd_run(args) -> int:
    cfg = load_experiment_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    out_dir = Path(args.out) if args.out else Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest_path = Path(cfg.manifest)
    manifest = DatasetManifest.from_json(manifest_path.read_text())
    timeline = load_timeline(manifest, manifest_path.parent)

    if cfg.grid_search:
        result, model = grid_search(
            timeline,
            timeline.annotations,
            cfg.labeling,
            cfg.architecture,
            cfg.mode,
            cfg.training,
            cfg.seed,
            sub_window_s=cfg.sub_window_s,
            jobs=args.jobs,
        )
        cells, selected = result.cells, result.selected
    else:
        result, model = run_fixed(
            timeline,
            timeline.annotations,
            cfg.labeling,
            cfg.architecture,
            cfg.mode,
            cfg.training,
            cfg.seed,
            sub_window_s=cfg.sub_window_s,
        )
        from preictal.experiment import GridCell

        cells = [GridCell(cfg.labeling.window_size_s, cfg.labeling.ppl_s, result.cv)]
        selected = (cfg.labeling.window_size_s, cfg.labeling.ppl_s)

    header = ["patient", "architecture", "mode", "window_s", "ppl_s", "fold", "auc_roc", "auc_pr"]
    _write_csv(out_dir / "results.csv", header, _result_rows(manifest.patient_id, cfg, cells, result.test, selected))
    _write_csv(
        out_dir / "roc_test.csv",
        ["fpr", "tpr"],
        [[_fmt(a), _fmt(b)] for a, b in result.test.roc_points],
    )
    _write_csv(
        out_dir / "pr_test.csv",
        ["recall", "precision"],
        [[_fmt(a), _fmt(b)] for a, b in result.test.pr_points],
    )
    (out_dir / "model.ixck").write_bytes(save_model(model, cfg.architecture))
    run_manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.canonical_hash(),
        "seed": cfg.seed,
        "selected_window_s": selected[0],
        "selected_ppl_s": selected[1],
        "versions": {
            "python": ".".join(str(v) for v in sys.version_info[:3]),
            "numpy": np.__version__,
            "preictal": preictal.__version__,
        },
    }
    (out_dir / "run_manifest.json").write_text(json.dumps(run_manifest, indent=2, sort_keys=True) + "\n")
    print(
        f"run complete: test auc_roc={result.test.auc_roc:.4f} "
        f"auc_pr={result.test.auc_pr:.4f} (outputs in {out_dir})"
    )
    return 0


def cmd_report(args) -> int:
    out_dir = Path(args.out) if args.out else Path(args.run) / "report"
    report_mod.generate_report(Path(args.run), out_dir)
    print(f"report written to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="preictal", description="EEG seizure prediction experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_convert = sub.add_parser("convert", help="convert EDF files to the raw-binary format")
    p_convert.add_argument("inputs", nargs="+", help="EDF files or directories")
    p_convert.add_argument("--out", required=True, help="output directory")
    p_convert.set_defaults(func=cmd_convert)

    p_synth = sub.add_parser("synth", help="generate a synthetic patient dataset")
    p_synth.add_argument("--spec", default=None, help="synthesis spec YAML (built-in default if omitted)")
    p_synth.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    p_run = sub.add_parser("run", help="run a full experiment from a config file")
    p_run.add_argument("--config", required=True, help="experiment config YAML")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel grid-cell workers")
    p_run.add_argument("--out", default=None, help="override the config output directory")
    p_run.set_defaults(func=cmd_run)

    p_report = sub.add_parser("report", help="emit plot-ready files from a run directory")
    p_report.add_argument("--run", required=True, help="completed run directory")
    p_report.add_argument("--out", default=None, help="report output directory (default RUN/report)")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PreictalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
