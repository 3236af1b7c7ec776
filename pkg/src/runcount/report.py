"""Delimited and graphical output for experiment reports.

``cells.csv`` carries every cell with confusion counts per family so the
report can be rebuilt from it alone. Heatmaps come in two flavours: a
hand-written SVG per outlier method, laid out on a fixed pixel grid so
identical reports give identical bytes, and a matplotlib PNG with all
methods side by side.
"""

import csv
import os
from html import escape

from . import learners
from .errors import RuncountError
from .experiment import CellResult, ExperimentReport
from .fileio import atomic_open
from .grid import ConfigKey
from .learners import Family, MetricsReport

REPORT_FAMILIES = (Family.DECISION_TREE, Family.RANDOM_FOREST, Family.GRADIENT_BOOSTING, Family.MAJORITY_BASELINE)
COUNT_FIELDS = ("tp", "fp", "tn", "fn")

# Fill colours: purple decision tree, green forest, blue boosting; pink
# marks cells without a valid classifier.
FAMILY_COLORS = {
    Family.DECISION_TREE: "#9e7cc1",
    Family.RANDOM_FOREST: "#7fbf7b",
    Family.GRADIENT_BOOSTING: "#6fa8dc",
}
INVALID_COLOR = "#f4c2c2"
UNEVALUABLE_COLOR = "#d9d9d9"

# SVG layout, in pixels
CELL_W, CELL_H = 96, 60
MARGIN_LEFT, MARGIN_TOP, MARGIN_RIGHT = 128, 56, 16
LEGEND_H = 40
FONT = "DejaVu Sans, Arial, sans-serif"


def _cells_header():
    cols = ["key", "method_code", "tau", "algorithm", "status", "error", "winner", "valid", "beats_baseline_f1_1"]
    for fam in REPORT_FAMILIES:
        a = fam.abbreviation
        cols += [f"{a}_{c}" for c in COUNT_FIELDS] + [f"{a}_{m}" for m in learners.METRIC_COLUMNS] + [f"{a}_params"]
    return cols


def write_cells_csv(report, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(_cells_header())
    for c in report.cells:
        row = [
            str(c.key), c.key.method_code, repr(c.key.tau), c.key.algorithm,
            "ok" if c.evaluable else "unevaluable", c.error or "",
            c.winner.abbreviation if c.winner else "", int(c.valid), int(c.beats_baseline_f1_1),
        ]
        for fam in REPORT_FAMILIES:
            m = c.baseline if fam is Family.MAJORITY_BASELINE else c.family_metrics.get(fam)
            if m is None:
                row += [""] * (len(COUNT_FIELDS) + len(learners.METRIC_COLUMNS) + 1)
                continue
            spec = c.family_specs.get(fam)
            row += [getattr(m, f) for f in COUNT_FIELDS] + [repr(v) for v in m.as_row()]
            row.append(spec.describe() if spec else "")
        w.writerow(row)


def read_cells_csv(path):
    """Rebuild an ExperimentReport (metrics and flags, not models) from cells.csv."""
    cells = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = ConfigKey.parse(row["key"])
            if row["status"] != "ok":
                cells.append(CellResult(key, error=row["error"] or "unevaluable"))
                continue
            cell = CellResult(key)
            for fam in REPORT_FAMILIES:
                a = fam.abbreviation
                if row.get(f"{a}_tp", "") == "":
                    continue
                m = MetricsReport(*(int(row[f"{a}_{f}"]) for f in COUNT_FIELDS))
                if fam is Family.MAJORITY_BASELINE:
                    cell.baseline = m
                else:
                    cell.family_metrics[fam] = m
            if row["winner"]:
                cell.winner = learners.family_from_name(row["winner"])
            cells.append(cell)
    return ExperimentReport(cells)


def _fmt(x):
    return f"{x:.3f}"


def write_summary_csv(report, fh):
    """Per-algorithm validity counts, then the baseline-beating table."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["algorithm", "valid", "evaluable", "cells", "valid_rate"])
    for alg, (v, e, t) in report.per_algorithm().items():
        w.writerow([alg, v, e, t, _fmt(v / e) if e else "n/a"])
    frac = report.valid_fraction
    w.writerow(["ALL", report.valid_count, len(report.evaluable), len(report.cells), "n/a" if frac is None else _fmt(frac)])
    w.writerow([])
    w.writerow(["Dataset", "Model", "Pr1", "Rc1", "F1_1", "Pr0", "Rc0", "F1_0"])
    for key, fam, m in report.baseline_beating():
        w.writerow([str(key), fam.value] + [_fmt(v) for v in m.as_row()])


def _grid_axes(report, method_code):
    cells = [c for c in report.cells if c.key.method_code == method_code]
    algorithms = list(dict.fromkeys(c.key.algorithm for c in cells))
    taus = sorted({c.key.tau for c in cells})
    lookup = {(c.key.algorithm, c.key.tau): c for c in cells}
    return algorithms, taus, lookup


def cell_lines(cell):
    """Text lines drawn inside a heatmap cell; empty unless the cell is valid."""
    if cell is None or not cell.valid:
        return []
    return [cell.winner.abbreviation, _fmt(cell.best.f1_1), _fmt(cell.best.recall_0)]


def cell_color(cell):
    if cell is None or not cell.evaluable:
        return UNEVALUABLE_COLOR
    return FAMILY_COLORS[cell.winner] if cell.valid else INVALID_COLOR


def render_heatmap_svg(report, method_code):
    algorithms, taus, lookup = _grid_axes(report, method_code)
    if not algorithms:
        raise RuncountError(f"no cells for outlier method {method_code}")
    width = MARGIN_LEFT + CELL_W * len(taus) + MARGIN_RIGHT
    height = MARGIN_TOP + CELL_H * len(algorithms) + LEGEND_H
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="{FONT}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="20" font-size="14" text-anchor="middle" font-weight="bold">'
        f"Outlier method {method_code}</text>",
    ]
    for j, tau in enumerate(taus):
        x = MARGIN_LEFT + CELL_W * j + CELL_W / 2
        out.append(f'<text x="{x:.1f}" y="{MARGIN_TOP - 8}" font-size="12" text-anchor="middle">{tau!r}</text>')
    for i, alg in enumerate(algorithms):
        y0 = MARGIN_TOP + CELL_H * i
        out.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{y0 + CELL_H / 2 + 4:.1f}" font-size="12" text-anchor="end">{escape(alg)}</text>'
        )
        for j, tau in enumerate(taus):
            cell = lookup.get((alg, tau))
            x0 = MARGIN_LEFT + CELL_W * j
            out.append(
                f'<rect x="{x0}" y="{y0}" width="{CELL_W}" height="{CELL_H}" fill="{cell_color(cell)}" '
                'stroke="#ffffff" stroke-width="2"/>'
            )
            for k, line in enumerate(cell_lines(cell)):
                out.append(
                    f'<text x="{x0 + CELL_W / 2:.1f}" y="{y0 + 18 + 15 * k}" font-size="12" text-anchor="middle">{line}</text>'
                )
    ly = MARGIN_TOP + CELL_H * len(algorithms) + 14
    entries = [(f.abbreviation, c) for f, c in FAMILY_COLORS.items()] + [("none", INVALID_COLOR)]
    for k, (label, color) in enumerate(entries):
        lx = MARGIN_LEFT + 70 * k
        out.append(f'<rect x="{lx}" y="{ly}" width="12" height="12" fill="{color}"/>')
        out.append(f'<text x="{lx + 16}" y="{ly + 11}" font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_heatmaps_png(report, path):
    """Side-by-side matplotlib heatmaps, one panel per outlier method."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.colors import to_rgb
    from matplotlib.patches import Patch

    methods = sorted({c.key.method_code for c in report.cells})
    fig, axes = plt.subplots(1, len(methods), figsize=(3.2 * len(methods) + 1, 0.5 * _n_rows(report) + 1.6), squeeze=False)
    for ax, method in zip(axes[0], methods):
        algorithms, taus, lookup = _grid_axes(report, method)
        image = [[to_rgb(cell_color(lookup.get((a, t)))) for t in taus] for a in algorithms]
        ax.imshow(image, aspect="auto")
        for i, a in enumerate(algorithms):
            for j, t in enumerate(taus):
                text = "\n".join(cell_lines(lookup.get((a, t))))
                if text:
                    ax.text(j, i, text, ha="center", va="center", fontsize=6)
        ax.set_xticks(range(len(taus)), [repr(t) for t in taus], fontsize=7)
        ax.set_yticks(range(len(algorithms)), algorithms, fontsize=7)
        ax.set_xticks([x - 0.5 for x in range(1, len(taus))], minor=True)
        ax.set_yticks([y - 0.5 for y in range(1, len(algorithms))], minor=True)
        ax.grid(which="minor", color="white", linewidth=1.5)
        ax.tick_params(which="minor", length=0)
        ax.set_title(f"Outlier method {method}", fontsize=9)
        ax.set_xlabel("skewness threshold", fontsize=8)
    handles = [Patch(color=c, label=f.abbreviation) for f, c in FAMILY_COLORS.items()]
    handles.append(Patch(color=INVALID_COLOR, label="no valid classifier"))
    fig.legend(handles=handles, loc="lower center", ncol=len(handles), fontsize=7, frameon=False)
    fig.tight_layout(rect=(0, 0.08, 1, 1))
    with atomic_open(path, "wb") as fh:
        fig.savefig(fh, format="png", dpi=150, metadata={"Software": None})
    plt.close(fig)


def render_success_png(report, path):
    """Bar chart of valid-cell rate per algorithm."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    per_alg = report.per_algorithm()
    names = list(per_alg)
    rates = [v / e if e else 0.0 for v, e, _ in per_alg.values()]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.55 * len(names) + 1.5), 3.0))
    ax.bar(range(len(names)), rates, color="#6fa8dc")
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right", fontsize=7)
    ax.set_ylim(0, 1)
    ax.set_ylabel("valid cell rate")
    fig.tight_layout()
    with atomic_open(path, "wb") as fh:
        fig.savefig(fh, format="png", dpi=150, metadata={"Software": None})
    plt.close(fig)


def _n_rows(report):
    return len({c.key.algorithm for c in report.cells})


def emit_reports(report, out_dir, figures=True):
    """Write cells.csv, summary.csv, one SVG heatmap per method and, with
    ``figures``, the matplotlib PNGs. Returns the written paths."""
    if not report.cells:
        raise RuncountError("empty report")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    path = os.path.join(out_dir, "cells.csv")
    with atomic_open(path) as fh:
        write_cells_csv(report, fh)
    written.append(path)
    path = os.path.join(out_dir, "summary.csv")
    with atomic_open(path) as fh:
        write_summary_csv(report, fh)
    written.append(path)
    for method in sorted({c.key.method_code for c in report.cells}):
        path = os.path.join(out_dir, f"heatmap_method{method}.svg")
        with atomic_open(path) as fh:
            fh.write(render_heatmap_svg(report, method))
        written.append(path)
    if figures:
        for name, render in (("heatmaps.png", render_heatmaps_png), ("success_rates.png", render_success_png)):
            path = os.path.join(out_dir, name)
            render(report, path)
            written.append(path)
    return written
