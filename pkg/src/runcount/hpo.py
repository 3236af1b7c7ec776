"""Seeded random hyperparameter search scored by stratified k-fold
cross-validation on minority-class recall.

Inside every fold the normalizer and SMOTE see only the training folds;
the validation fold is transformed with those statistics and otherwise
left alone.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import dataset, learners
from .audit import record_access
from .errors import RuncountError, RuncountWarning, SingleClassError
from .learners import Family, LearnerSpec
from .seeding import derive_seed


@dataclass(frozen=True)
class Dim:
    kind: str  # "int", "real" or "log"
    low: float
    high: float

    def __post_init__(self):
        if self.kind not in ("int", "real", "log"):
            raise RuncountError(f"unknown dimension kind {self.kind!r}")
        if self.low > self.high or (self.kind == "log" and self.low <= 0):
            raise RuncountError(f"invalid bounds [{self.low}, {self.high}] for {self.kind} dimension")

    def sample(self, rng):
        if self.kind == "int":
            return int(rng.integers(int(self.low), int(self.high) + 1))
        if self.kind == "log":
            return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))
        return float(rng.uniform(self.low, self.high))


def int_dim(low, high):
    return Dim("int", low, high)


DEFAULT_SPACES = {
    Family.DECISION_TREE: {"max_depth": int_dim(1, 8), "min_samples_leaf": int_dim(1, 20)},
    Family.RANDOM_FOREST: {"n_trees": int_dim(20, 300), "max_depth": int_dim(2, 8), "min_samples_leaf": int_dim(1, 10)},
    Family.GRADIENT_BOOSTING: {
        "n_trees": int_dim(20, 300),
        "learning_rate": Dim("log", 0.01, 0.3),
        "max_depth": int_dim(1, 3),
        "min_samples_leaf": int_dim(1, 20),
    },
    Family.MAJORITY_BASELINE: {},
}


def sample_params(space, rng):
    # sorted names so the draw order never depends on dict construction
    return {name: space[name].sample(rng) for name in sorted(space)}


def stratified_folds(y, folds, seed):
    """Fold index per row; each class is shuffled and dealt round-robin."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    assign = np.empty(y.size, dtype=int)
    for label in (0, 1):
        idx = rng.permutation(np.flatnonzero(y == label))
        assign[idx] = np.arange(idx.size) % folds
    return assign


@dataclass(frozen=True)
class CVResult:
    folds: tuple  # MetricsReport per fold

    @property
    def recall_0(self):
        return tuple(m.recall_0 for m in self.folds)

    @property
    def mean_recall_0(self):
        return float(np.mean(self.recall_0))

    @property
    def mean_f1_1(self):
        return float(np.mean([m.f1_1 for m in self.folds]))


def cross_validate(spec, train, folds=5, seed=0, smote_k=5, model_seed=0):
    c0, c1 = train.class_counts()
    if c0 == 0 or c1 == 0:
        raise SingleClassError("single-class training data")
    if min(c0, c1) < folds:
        warnings.warn(f"reducing folds from {folds} to {min(c0, c1)}", RuncountWarning, stacklevel=2)
        folds = min(c0, c1)
    if folds < 2:
        raise SingleClassError("minority class too small for cross-validation")
    record_access("cv", train.ids)
    assign = stratified_folds(train.y, folds, seed)
    reports = []
    for f in range(folds):
        fit_part = train.subset(np.flatnonzero(assign != f))
        val_part = train.subset(np.flatnonzero(assign == f))
        record_access("cv_validate", val_part.ids)
        normalizer, enriched = dataset.prepare_training(fit_part, k=smote_k, seed=derive_seed(seed, "smote", f))
        model = learners.train(spec, enriched, seed=model_seed)
        pred = learners.predict(model, dataset.apply_normalizer(normalizer, val_part))
        reports.append(learners.evaluate(pred, val_part.y))
    return CVResult(tuple(reports))


@dataclass
class Trial:
    index: int
    spec: LearnerSpec
    cv: CVResult | None
    error: str | None = None


@dataclass
class TrialLog:
    family: Family
    seed: int
    trials: list = field(default_factory=list)
    normalizer: object = None
    model: object = None

    @property
    def best_index(self):
        return select_best(self.trials)

    @property
    def best(self):
        return self.trials[self.best_index]


def select_best(trials):
    """Highest mean recall_0, then mean f1_1, then fewer trees, shallower, earlier."""
    scored = [t for t in trials if t.cv is not None]
    if not scored:
        raise RuncountError("no valid trial")

    def key(t):
        n_trees, depth = t.spec.complexity()
        return (t.cv.mean_recall_0, t.cv.mean_f1_1, -n_trees, -depth, -t.index)

    return max(scored, key=key).index


def search(family, train, space=None, budget=50, seed=0, folds=5, smote_k=5, refit=True):
    if budget < 1:
        raise RuncountError(f"budget must be >= 1, got {budget}")
    space = DEFAULT_SPACES[family] if space is None else space
    log = TrialLog(family, seed)
    fold_seed = derive_seed(seed, "folds")
    for i in range(budget):
        spec = LearnerSpec(family, sample_params(space, np.random.default_rng(derive_seed(seed, "trial", i))))
        try:
            cv = cross_validate(spec, train, folds, fold_seed, smote_k, model_seed=derive_seed(seed, "model", i))
            log.trials.append(Trial(i, spec, cv))
        except RuncountError as exc:
            log.trials.append(Trial(i, spec, None, str(exc)))
    best = log.best
    if refit:
        log.normalizer, enriched = dataset.prepare_training(train, k=smote_k, seed=derive_seed(seed, "smote", "final"))
        log.model = learners.train(best.spec, enriched, seed=derive_seed(seed, "model", best.index))
    return log


TRIAL_COLUMNS = ["cell", "trial", "family", "params", "fold_recall_0", "mean_recall_0", "mean_f1_1", "error"]


def write_trial_log(fh, log, cell="", header=True):
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow(TRIAL_COLUMNS)
    for t in log.trials:
        if t.cv is None:
            w.writerow([cell, t.index, log.family.value, t.spec.describe(), "", "", "", t.error])
        else:
            w.writerow([
                cell, t.index, log.family.value, t.spec.describe(),
                ";".join(repr(r) for r in t.cv.recall_0), repr(t.cv.mean_recall_0), repr(t.cv.mean_f1_1), "",
            ])
