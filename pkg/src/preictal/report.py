"""Plot-ready outputs from a completed run directory.

Reads the CSVs a run wrote (results, ROC and PR points) and emits aggregate
tables plus standalone SVG curve plots. Nothing is recomputed; a missing
input file is an error naming what was expected.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

from preictal.errors import FormatError

EXPECTED_FILES = ("results.csv", "roc_test.csv", "pr_test.csv")


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path} is empty")
    return rows[0], rows[1:]


def _svg_curve(points: list[tuple[float, float]], x_label: str, y_label: str, title: str) -> str:
    width, height, margin = 480, 360, 48
    plot_w, plot_h = width - 2 * margin, height - 2 * margin

    def sx(x: float) -> float:
        return margin + x * plot_w

    def sy(y: float) -> float:
        return height - margin - y * plot_h

    coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in points)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>',
        f'<text x="14" y="{height / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2:.0f})">{y_label}</text>',
        f'<polyline points="{coords}" fill="none" stroke="steelblue" stroke-width="1.5"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<text x="{sx(tick):.1f}" y="{height - margin + 16}" text-anchor="middle" '
            f'font-size="10">{tick:g}</text>'
        )
        parts.append(
            f'<text x="{margin - 6}" y="{sy(tick) + 3:.1f}" text-anchor="end" '
            f'font-size="10">{tick:g}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def generate_report(run_dir: Path, out_dir: Path) -> None:
    missing = [name for name in EXPECTED_FILES if not (run_dir / name).exists()]
    if missing:
        raise FormatError(
            f"run directory {run_dir} is incomplete; missing: {', '.join(missing)}"
        )
    out_dir.mkdir(parents=True, exist_ok=True)

    header, rows = _read_csv(run_dir / "results.csv")
    col = {name: i for i, name in enumerate(header)}
    fold_rows = [r for r in rows if r[col["fold"]] != "test"]
    test_rows = [r for r in rows if r[col["fold"]] == "test"]

    # mean validation AUCs per grid cell
    cells: dict[tuple[str, str], list[tuple[float, float]]] = defaultdict(list)
    for r in fold_rows:
        key = (r[col["window_s"]], r[col["ppl_s"]])
        cells[key].append((float(r[col["auc_roc"]]), float(r[col["auc_pr"]])))
    grid_rows = []
    for (w, p), vals in sorted(cells.items(), key=lambda kv: (float(kv[0][1]), float(kv[0][0]))):
        mean_roc = sum(v[0] for v in vals) / len(vals)
        mean_pr = sum(v[1] for v in vals) / len(vals)
        grid_rows.append([w, p, f"{mean_roc:.10g}", f"{mean_pr:.10g}", str(len(vals))])
    with open(out_dir / "grid_table.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["window_s", "ppl_s", "mean_val_auc_roc", "mean_val_auc_pr", "n_folds"])
        writer.writerows(grid_rows)

    # one test row per trained architecture/mode
    with open(out_dir / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["patient", "architecture", "mode", "window_s", "ppl_s", "auc_roc", "auc_pr"])
        for r in test_rows:
            writer.writerow(
                [
                    r[col["patient"]],
                    r[col["architecture"]],
                    r[col["mode"]],
                    r[col["window_s"]],
                    r[col["ppl_s"]],
                    r[col["auc_roc"]],
                    r[col["auc_pr"]],
                ]
            )

    _, roc_rows = _read_csv(run_dir / "roc_test.csv")
    roc_points = [(float(a), float(b)) for a, b in roc_rows]
    (out_dir / "roc.svg").write_text(
        _svg_curve(roc_points, "false positive rate", "true positive rate", "ROC (test)")
    )
    _, pr_rows = _read_csv(run_dir / "pr_test.csv")
    pr_points = [(float(a), float(b)) for a, b in pr_rows]
    (out_dir / "pr.svg").write_text(
        _svg_curve(pr_points, "recall", "precision", "Precision-recall (test)")
    )
