"""Within-configuration study over a grid of (method, threshold, optimizer)
cells.

Each cell is split once; every learner family is tuned on the training
part only and scored exactly once on the held-out part, next to a
majority-class baseline fitted on the same split.
"""

import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import dataset, hpo, learners
from .audit import record_access
from .errors import RuncountError, SingleClassError
from .features import build_features
from .learners import Family
from .seeding import derive_seed

log = logging.getLogger(__name__)

F1_1_MIN = 0.70
RECALL_0_MIN = 0.80
FAMILY_ORDER = {Family.DECISION_TREE: 0, Family.RANDOM_FOREST: 1, Family.GRADIENT_BOOSTING: 2}


@dataclass(frozen=True)
class PipelineConfig:
    families: tuple = learners.LEARNED_FAMILIES
    budget: int = 50
    folds: int = 5
    test_fraction: float = 0.3
    smote_k: int = 5


def is_valid(report):
    return report.f1_1 > F1_1_MIN and report.recall_0 > RECALL_0_MIN


@dataclass
class CellResult:
    key: object
    family_metrics: dict = field(default_factory=dict)
    family_specs: dict = field(default_factory=dict)
    winner: Family | None = None
    baseline: learners.MetricsReport | None = None
    error: str | None = None
    split_ids: tuple = field(default=((), ()), repr=False)
    trial_csv: str = field(default="", repr=False)

    @property
    def evaluable(self):
        return self.error is None

    @property
    def best(self):
        return self.family_metrics.get(self.winner)

    @property
    def valid(self):
        return self.best is not None and is_valid(self.best)

    @property
    def beats_baseline_f1_1(self):
        return self.best is not None and self.baseline is not None and self.best.f1_1 > self.baseline.f1_1


def pick_winner(family_metrics):
    """Max recall_0 among valid families (or among all if none is valid),
    then higher f1_1, then the fixed family order."""
    if not family_metrics:
        return None
    pool = {f: m for f, m in family_metrics.items() if is_valid(m)} or family_metrics
    return max(pool, key=lambda f: (pool[f].recall_0, pool[f].f1_1, -FAMILY_ORDER.get(f, 99)))


def run_cell(key, corpus, config=PipelineConfig(), seed=0):
    """Evaluate one configuration cell. ``corpus`` maps ConfigKey to LabeledDataset."""
    ds = corpus.get(key)
    if ds is None:
        raise RuncountError(f"empty configuration: no rows for {key}")
    split = dataset.stratified_split(ds, config.test_fraction, seed=derive_seed(seed, "split"))
    if split.test.class_counts()[0] == 0:
        raise SingleClassError("single-class test set")
    test = split.test
    result = CellResult(key, split_ids=(split.train.ids, test.ids))
    trials = io.StringIO()
    for family in config.families:
        trial_log = hpo.search(
            family, split.train, budget=config.budget, seed=derive_seed(seed, family.value),
            folds=config.folds, smote_k=config.smote_k,
        )
        hpo.write_trial_log(trials, trial_log, cell=str(key), header=False)
        record_access(f"evaluate:{family.value}", test.ids)
        pred = learners.predict(trial_log.model, dataset.apply_normalizer(trial_log.normalizer, test))
        result.family_metrics[family] = learners.evaluate(pred, test.y)
        result.family_specs[family] = trial_log.best.spec
    baseline = learners.train(learners.LearnerSpec(Family.MAJORITY_BASELINE), split.train)
    record_access(f"evaluate:{Family.MAJORITY_BASELINE.value}", test.ids)
    result.baseline = learners.evaluate(learners.predict(baseline, test), test.y)
    result.winner = pick_winner(result.family_metrics)
    result.trial_csv = trials.getvalue()
    return result


@dataclass
class ExperimentReport:
    cells: list

    @property
    def evaluable(self):
        return [c for c in self.cells if c.evaluable]

    @property
    def valid_count(self):
        return sum(c.valid for c in self.cells)

    @property
    def valid_fraction(self):
        """Valid share of evaluable cells, or None when nothing was evaluable."""
        n = len(self.evaluable)
        return self.valid_count / n if n else None

    def per_algorithm(self):
        """``{algorithm: (valid, evaluable, total)}`` in grid order."""
        out = {}
        for c in self.cells:
            v, e, t = out.get(c.key.algorithm, (0, 0, 0))
            out[c.key.algorithm] = (v + c.valid, e + c.evaluable, t + 1)
        return out

    def baseline_beating(self):
        """(key, family, metrics) for every family whose test F1_1 beats the baseline's."""
        rows = []
        for c in self.cells:
            if not c.evaluable:
                continue
            for fam in sorted(c.family_metrics, key=lambda f: FAMILY_ORDER.get(f, 99)):
                m = c.family_metrics[fam]
                if m.f1_1 > c.baseline.f1_1:
                    rows.append((c.key, fam, m))
        return rows


_worker_corpus = None


def _init_worker(corpus):
    global _worker_corpus
    _worker_corpus = corpus


def _run_guarded(key, corpus, config, master_seed):
    try:
        return run_cell(key, corpus, config, seed=derive_seed(master_seed, str(key)))
    except RuncountError as exc:
        log.warning("cell %s unevaluable: %s", key, exc)
        return CellResult(key, error=str(exc))


def _run_in_worker(key, config, master_seed):
    return _run_guarded(key, _worker_corpus, config, master_seed)


def run_grid(corpus, grid, master_seed=0, config=PipelineConfig(), workers=1, progress=None):
    """Run every cell; failures are recorded per cell and never abort the grid."""
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(corpus,)) as pool:
            futures = [pool.submit(_run_in_worker, key, config, master_seed) for key in grid]
            cells = []
            for fut in futures:
                cells.append(fut.result())
                if progress:
                    progress(cells[-1])
    else:
        cells = []
        for key in grid:
            cells.append(_run_guarded(key, corpus, config, master_seed))
            if progress:
                progress(cells[-1])
    return ExperimentReport(cells)


def load_corpus(corpus_dir, features_path=None):
    """Load features for a corpus directory, deriving them from runs/labels if needed."""
    path = os.path.join(corpus_dir, "features.csv")
    if not os.path.exists(path):
        path = features_path or os.path.join(corpus_dir, "features.csv")
        build_features(os.path.join(corpus_dir, "runs.csv"), os.path.join(corpus_dir, "labels.csv"), path)
    return dataset.load_features(path), path
