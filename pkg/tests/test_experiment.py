import io
import warnings

import numpy as np
import pytest

from runcount import dataset, experiment, grid, report
from runcount.audit import audit_access
from runcount.dataset import LabeledDataset
from runcount.errors import RuncountWarning, SingleClassError
from runcount.experiment import CellResult, ExperimentReport, PipelineConfig
from runcount.features import FEATURE_NAMES
from runcount.grid import ConfigKey
from runcount.learners import Family, MetricsReport

FAST = PipelineConfig(budget=1)


def cell(alg, tau, winner=Family.DECISION_TREE, m=None, method=1, baseline=MetricsReport(60, 10, 0, 0)):
    m = m or MetricsReport(55, 1, 9, 5)
    return CellResult(ConfigKey(method, tau, alg), {winner: m}, {}, winner, baseline)


@pytest.fixture(scope="module")
def corpus(mini_corpus):
    out, keys = mini_corpus
    return dataset.load_features(out / "features.csv"), keys


def test_validity_is_strict():
    # f1_1 exactly 0.7: tp=7, fp=3, fn=3 gives p = r = 0.7
    edge = MetricsReport(tp=7, fp=3, tn=27, fn=3)
    assert edge.f1_1 == pytest.approx(0.7) and edge.f1_1 <= 0.7
    assert not experiment.is_valid(edge)
    # recall_0 exactly 0.8
    assert not experiment.is_valid(MetricsReport(tp=40, fp=2, tn=8, fn=0))
    assert experiment.is_valid(MetricsReport(tp=40, fp=1, tn=9, fn=0))


def test_winner_prefers_valid_then_recall_then_order():
    strong = MetricsReport(40, 1, 9, 0)
    high_recall_invalid = MetricsReport(2, 0, 10, 38)
    assert experiment.pick_winner({Family.DECISION_TREE: high_recall_invalid, Family.RANDOM_FOREST: strong}) is Family.RANDOM_FOREST
    tie = {Family.GRADIENT_BOOSTING: strong, Family.RANDOM_FOREST: strong, Family.DECISION_TREE: strong}
    assert experiment.pick_winner(tie) is Family.DECISION_TREE
    weak_a, weak_b = MetricsReport(10, 5, 5, 30), MetricsReport(30, 6, 4, 10)
    assert experiment.pick_winner({Family.DECISION_TREE: weak_a, Family.RANDOM_FOREST: weak_b}) is Family.DECISION_TREE
    assert experiment.pick_winner({}) is None


def test_separable_cell_is_valid_and_reproducible(corpus):
    data, keys = corpus
    key = next(k for k in keys if k.algorithm == "SepA")
    a = experiment.run_cell(key, data, FAST, seed=3)
    b = experiment.run_cell(key, data, FAST, seed=3)
    assert a.valid and a.best.recall_0 == 1.0
    assert a == b


def test_test_rows_are_used_once_per_family(corpus):
    data, keys = corpus
    key = keys[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuncountWarning)
        with audit_access() as audit:
            result = experiment.run_cell(key, data, FAST, seed=1)
    test_ids = set(result.split_ids[1])
    fitting = ("normalizer_fit", "smote", "train", "cv", "cv_validate")
    touched = set()
    for ident in audit.ids_for(*fitting):
        touched |= set(ident.split(":")[2:]) if ident.startswith("smote:") else {ident}
    assert not touched & test_ids
    for fam in list(FAST.families) + [Family.MAJORITY_BASELINE]:
        assert audit.counts[f"evaluate:{fam.value}"] == 1
        assert audit.ids_for(f"evaluate:{fam.value}") == test_ids


def lonely_minority_dataset(key):
    rng = np.random.default_rng(0)
    y = np.array([0] + [1] * 30)
    X = rng.normal(size=(31, len(FEATURE_NAMES)))
    return LabeledDataset(key, X, y, np.zeros(31, dtype=bool), tuple(f"x/{i}" for i in range(31)))


def test_single_class_test_set_is_unevaluable():
    key = ConfigKey(2, 0.1, "Lonely")
    data = {key: lonely_minority_dataset(key)}
    with pytest.warns(RuncountWarning):
        with pytest.raises(SingleClassError, match="single-class test set"):
            experiment.run_cell(key, data, FAST)
    with pytest.warns(RuncountWarning):
        rep = experiment.run_grid(data, [key], config=FAST)
    assert not rep.cells[0].evaluable and "single-class test set" in rep.cells[0].error
    assert rep.valid_fraction is None


def test_missing_cell_recorded_not_raised():
    rep = experiment.run_grid({}, [ConfigKey(1, 0.05, "Ghost")], config=FAST)
    assert rep.cells[0].error.startswith("empty configuration")


def test_report_aggregates_match_cell_flags():
    invalid = MetricsReport(30, 8, 2, 20)
    cells = [cell("A", 0.05), cell("A", 0.1, m=invalid), cell("B", 0.05), CellResult(ConfigKey(1, 0.1, "B"), error="boom")]
    rep = ExperimentReport(cells)
    assert rep.valid_count == sum(c.valid for c in cells) == 2
    assert rep.valid_fraction == pytest.approx(2 / 3)
    assert rep.per_algorithm() == {"A": (1, 2, 2), "B": (1, 1, 2)}


def test_full_grid_denominators():
    keys = grid.full_grid()
    rep = ExperimentReport([CellResult(k, error="skipped") for k in keys])
    assert len(keys) == 132
    assert all(t == 12 for _, _, t in rep.per_algorithm().values())


def test_valid_fraction_for_64_of_132():
    keys = grid.full_grid()
    cells = [cell(k.algorithm, k.tau, method=k.method_code) if i < 64 else cell(k.algorithm, k.tau, m=MetricsReport(1, 9, 1, 9), method=k.method_code) for i, k in enumerate(keys)]
    assert f"{ExperimentReport(cells).valid_fraction:.1%}" == "48.5%"


def test_empty_grid_renders_na():
    rep = ExperimentReport([])
    buf = io.StringIO()
    report.write_summary_csv(rep, buf)
    assert "ALL,0,0,0,n/a" in buf.getvalue()


def test_baseline_recall_zero_on_every_cell(corpus):
    data, keys = corpus
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuncountWarning)
        for key in keys:
            split = dataset.stratified_split(data[key], seed=5)
            if split.train.class_counts()[1] > split.train.class_counts()[0] and split.test.class_counts()[0]:
                from runcount import learners

                model = learners.train(learners.LearnerSpec(Family.MAJORITY_BASELINE), split.train)
                assert learners.evaluate(learners.predict(model, split.test), split.test.y).recall_0 == 0.0
