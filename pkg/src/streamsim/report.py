"""CSV tables and SVG line plots for experiment runs."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from html import escape
from pathlib import Path
from typing import Sequence

import numpy as np

from .metrics import METRICS, write_report_csv

LABELS = {
    "cfld": "CFLD",
    "three_gram": "3GD",
    "aed": "AED (h)",
    "red": "RED (h)",
    "ced": "CED (h)",
    "cwd": "CWD (h)",
    "car": "CAR (h)",
    "ctd": "CTD (min)",
}
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def fmt_mean_std(values: Sequence[float]) -> str:
    if not values:
        return ""
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return f"{mean:.2f} ({std:.2f})"


def series(runs) -> dict:
    """metric -> technique -> {window: mean over replications}."""
    out: dict = {m: {} for m in METRICS}
    for run in runs:
        for m in METRICS:
            pts = {}
            for i, reps in sorted(run.reports.items()):
                vals = [getattr(r, m) for r in reps if getattr(r, m) is not None]
                if vals:
                    pts[i] = float(np.mean(vals))
            out[m][run.technique] = pts
    return out


def summary_rows(runs) -> list[list[str]]:
    rows = [["technique"] + list(METRICS)]
    for run in runs:
        row = [run.technique]
        for m in METRICS:
            row.append(fmt_mean_std([getattr(r, m) for r in run.all_reports() if getattr(r, m) is not None]))
        rows.append(row)
    return rows


def write_summary_csv(runs, target) -> None:
    with open(target, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(summary_rows(runs))


def write_window_csv(runs, target) -> None:
    with open(target, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["technique", "window", "metric", "mean_std", "skipped"])
        for run in runs:
            windows = sorted(set(run.reports) | set(run.skipped))
            for i in windows:
                for m in METRICS:
                    vals = [getattr(r, m) for r in run.reports.get(i, []) if getattr(r, m) is not None]
                    w.writerow([run.technique, i, m, fmt_mean_std(vals), run.skipped.get(i, "")])


def svg_plot(title: str, lines: dict, *, width: int = 640, height: int = 360) -> str:
    """Line chart with one polyline per entry of ``lines`` ({name: {x: y}}).

    Missing x values break the line instead of being drawn as zero.
    """
    left, right, top, bottom = 60, 150, 30, 40
    xs = sorted({x for pts in lines.values() for x in pts})
    ys = [y for pts in lines.values() for y in pts.values()]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0, 1)
    y_hi = max(ys) if ys else 1.0
    y_hi = y_hi * 1.05 if y_hi > 0 else 1.0
    if x_hi == x_lo:
        x_hi = x_lo + 1

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right)

    def py(y):
        return height - bottom - y / y_hi * (height - top - bottom)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
    ]
    for x in xs:
        out.append(
            f'<text x="{px(x):.1f}" y="{height - bottom + 16}" text-anchor="middle" font-family="sans-serif" font-size="11">{x}</text>'
        )
    for k in range(5):
        y = y_hi * k / 4
        out.append(
            f'<text x="{left - 6}" y="{py(y) + 4:.1f}" text-anchor="end" font-family="sans-serif" font-size="11">{y:.3g}</text>'
        )
        out.append(f'<line x1="{left}" y1="{py(y):.1f}" x2="{width - right}" y2="{py(y):.1f}" stroke="#eeeeee"/>')
    for n, (name, pts) in enumerate(lines.items()):
        color = COLORS[n % len(COLORS)]
        segment: list = []
        segments = []
        for x in xs:
            if x in pts and math.isfinite(pts[x]):
                segment.append((px(x), py(pts[x])))
            elif segment:
                segments.append(segment)
                segment = []
        if segment:
            segments.append(segment)
        for seg in segments:
            coords = " ".join(f"{a:.1f},{b:.1f}" for a, b in seg)
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
            for a, b in seg:
                out.append(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="3" fill="{color}"/>')
        ly = top + 16 * n + 10
        out.append(f'<line x1="{width - right + 10}" y1="{ly}" x2="{width - right + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{width - right + 34}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(name)}</text>'
        )
    out.append(
        f'<text x="{(left + width - right) / 2:.1f}" y="{height - 6}" text-anchor="middle" font-family="sans-serif" font-size="11">window</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_plots(runs, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for m, lines in series(runs).items():
        p = directory / f"{m}.svg"
        p.write_text(svg_plot(LABELS[m], lines), encoding="utf-8")
        paths.append(p)
    return paths


def emit_outputs(runs, directory) -> dict:
    """Write reports.csv, summary.csv, windows.csv and one SVG per metric."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    reports = directory / "reports.csv"
    write_report_csv([r for run in runs for r in run.all_reports()], reports)
    write_summary_csv(runs, directory / "summary.csv")
    write_window_csv(runs, directory / "windows.csv")
    plots = write_plots(runs, directory / "plots")
    return {"reports": reports, "summary": directory / "summary.csv", "windows": directory / "windows.csv", "plots": plots}


def read_report_csv(path) -> dict:
    """metric -> technique -> {window: mean} from a reports.csv file."""
    acc: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["value"] == "":
                continue
            acc[row["metric"]][row["technique"]][int(row["window"])].append(float(row["value"]))
    return {m: {t: {i: float(np.mean(v)) for i, v in sorted(w.items())} for t, w in techs.items()} for m, techs in acc.items()}


def plots_from_reports(path, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    data = read_report_csv(path)
    paths = []
    for m in METRICS:
        p = directory / f"{m}.svg"
        p.write_text(svg_plot(LABELS[m], data.get(m, {})), encoding="utf-8")
        paths.append(p)
    return paths


__all__ = ["emit_outputs", "fmt_mean_std", "svg_plot", "summary_rows", "series", "plots_from_reports"]
