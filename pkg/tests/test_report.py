import re

from runcount import report
from runcount.experiment import CellResult, ExperimentReport
from runcount.grid import ConfigKey
from runcount.learners import Family, LearnerSpec, MetricsReport

GOOD = MetricsReport(55, 1, 9, 5)
BAD = MetricsReport(30, 8, 2, 20)
BASE = MetricsReport(60, 10, 0, 0)


def sample_report():
    cells = []
    for m in (1, 2):
        for alg in ("Alpha", "Beta"):
            for tau in (0.05, 0.1):
                fam = Family.RANDOM_FOREST if tau == 0.05 else Family.GRADIENT_BOOSTING
                metrics = BAD if alg == "Beta" and m == 2 else GOOD
                spec = LearnerSpec(fam, {"n_trees": 20, "max_depth": 3})
                cells.append(CellResult(ConfigKey(m, tau, alg), {fam: metrics}, {fam: spec}, fam, BASE))
    cells.append(CellResult(ConfigKey(1, 0.15, "Alpha"), error="single-class test set"))
    return ExperimentReport(cells)


def test_valid_cell_has_three_lines_invalid_is_pink_and_empty():
    rep = sample_report()
    good, bad = rep.cells[0], rep.cells[6]
    assert report.cell_lines(good) == ["RF", "0.948", "0.900"]
    assert report.cell_color(good) == report.FAMILY_COLORS[Family.RANDOM_FOREST]
    assert not bad.valid
    assert report.cell_lines(bad) == [] and report.cell_color(bad) == report.INVALID_COLOR


def test_svg_contents():
    svg = report.render_heatmap_svg(sample_report(), 1)
    assert svg.startswith("<?xml") and svg.rstrip().endswith("</svg>")
    assert svg.count('fill="%s"' % report.FAMILY_COLORS[Family.GRADIENT_BOOSTING]) >= 2
    assert ">GBT<" in svg and ">0.948<" in svg
    assert report.UNEVALUABLE_COLOR in svg
    svg2 = report.render_heatmap_svg(sample_report(), 2)
    assert svg2.count(f'fill="{report.INVALID_COLOR}"') == 2 + 1  # two invalid cells plus the legend swatch
    assert re.search(r">Beta<", svg2)


def test_outputs_are_byte_deterministic(tmp_path):
    a = report.emit_reports(sample_report(), tmp_path / "a")
    b = report.emit_reports(sample_report(), tmp_path / "b")
    names = sorted(p.split("/")[-1] for p in a)
    assert names == ["cells.csv", "heatmap_method1.svg", "heatmap_method2.svg", "heatmaps.png", "success_rates.png", "summary.csv"]
    for pa, pb in zip(a, b):
        with open(pa, "rb") as fa, open(pb, "rb") as fb:
            assert fa.read() == fb.read(), pa


def test_cells_csv_round_trip(tmp_path):
    rep = sample_report()
    report.emit_reports(rep, tmp_path, figures=False)
    again = report.read_cells_csv(tmp_path / "cells.csv")
    assert [c.valid for c in again.cells] == [c.valid for c in rep.cells]
    assert [c.evaluable for c in again.cells] == [c.evaluable for c in rep.cells]
    assert again.per_algorithm() == rep.per_algorithm()


def test_summary_layout(tmp_path):
    rep = sample_report()
    report.emit_reports(rep, tmp_path, figures=False)
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert lines[0] == "algorithm,valid,evaluable,cells,valid_rate"
    assert lines[1] == "Alpha,4,4,5,1.000"
    assert lines[2] == "Beta,2,4,4,0.500"
    assert lines[3] == "ALL,6,8,9,0.750"
    assert lines[4] == ""
    assert lines[5] == "Dataset,Model,Pr1,Rc1,F1_1,Pr0,Rc0,F1_0"
    # baseline f1_1 is 0.923: the six good cells beat it, the two bad ones do not
    assert len(lines) == 6 + 6
