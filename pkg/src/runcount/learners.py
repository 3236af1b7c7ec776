"""Tree learners written against numpy, plus per-class metrics.

Every tree is a CART tree grown on a real-valued target with the
squared-error split criterion. For 0/1 targets the weighted squared error
of a node equals half its weighted Gini impurity, so classification trees
use the same builder and predict 1 when the leaf mean is >= 0.5.
Split ties go to the lowest feature index, then the lowest threshold.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .audit import record_access
from .errors import ModelMismatch, RuncountError, SingleClassError
from .features import FEATURE_NAMES

MODEL_FORMAT = "runcount-model"
MODEL_VERSION = 1


class Family(Enum):
    DECISION_TREE = "DecisionTree"
    RANDOM_FOREST = "RandomForest"
    GRADIENT_BOOSTING = "GradientBoostedTrees"
    MAJORITY_BASELINE = "MajorityBaseline"

    @property
    def abbreviation(self):
        return _ABBREVIATIONS[self]


_ABBREVIATIONS = {
    Family.DECISION_TREE: "DT",
    Family.RANDOM_FOREST: "RF",
    Family.GRADIENT_BOOSTING: "GBT",
    Family.MAJORITY_BASELINE: "BASE",
}

LEARNED_FAMILIES = (Family.DECISION_TREE, Family.RANDOM_FOREST, Family.GRADIENT_BOOSTING)


def family_from_name(name):
    for fam in Family:
        if name in (fam.value, fam.abbreviation, fam.name):
            return fam
    raise RuncountError(f"unknown learner family {name!r}")


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def depth(self):
        depth = np.zeros(self.feature.size, dtype=int)
        for i in range(self.feature.size):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X):
        node = np.zeros(X.shape[0], dtype=int)
        while True:
            rows = np.flatnonzero(self.feature[node] >= 0)
            if rows.size == 0:
                return node
            at = node[rows]
            go_left = X[rows, self.feature[at]] <= self.threshold[at]
            node[rows] = np.where(go_left, self.left[at], self.right[at])

    def predict(self, X):
        return self.value[self.apply(np.asarray(X, dtype=float))]

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["feature"], dtype=int),
            np.array(d["threshold"], dtype=float),
            np.array(d["left"], dtype=int),
            np.array(d["right"], dtype=int),
            np.array(d["value"], dtype=float),
        )


def _best_split(X, y, idx, features, min_leaf):
    m = idx.size
    Xn = X[np.ix_(idx, features)]
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    ys = y[idx][order]
    left_sum = np.cumsum(ys, axis=0)[:-1]
    total = left_sum[-1] + ys[-1]
    n_left = np.arange(1, m, dtype=float)[:, None]
    n_right = m - n_left
    # maximising this minimises the summed squared error of the children
    score = left_sum**2 / n_left + (total - left_sum) ** 2 / n_right
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    score = np.where(valid, score, -np.inf).T
    flat = int(np.argmax(score))
    f_pos, pos = divmod(flat, m - 1)
    if not np.isfinite(score[f_pos, pos]):
        return None
    lo, hi = xs[pos, f_pos], xs[pos + 1, f_pos]
    threshold = lo + (hi - lo) / 2.0
    if threshold >= hi:
        threshold = lo
    return int(features[f_pos]), float(threshold)


def grow_tree(X, y, max_depth, min_samples_leaf=1, max_features=None, rng=None):
    """Grow a least-squares CART tree on target ``y``.

    ``max_features`` features are drawn without replacement at every split
    when given; otherwise all features are candidates and ``rng`` is unused.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n_features = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()))
        return len(feature) - 1

    stack = [(new_node(np.arange(y.size)), np.arange(y.size), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth or idx.size < 2 * min_samples_leaf or np.all(y[idx] == y[idx[0]]):
            continue
        if max_features is None or max_features >= n_features:
            cand = np.arange(n_features)
        else:
            cand = np.sort(rng.choice(n_features, max_features, replace=False))
        split = _best_split(X, y, idx, cand, min_samples_leaf)
        if split is None:
            continue
        f, t = split
        go_left = X[idx, f] <= t
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, t
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return Tree(
        np.array(feature, dtype=int),
        np.array(threshold, dtype=float),
        np.array(left, dtype=int),
        np.array(right, dtype=int),
        np.array(value, dtype=float),
    )


def _check_binary(y):
    y = np.asarray(y)
    if y.size == 0:
        raise RuncountError("cannot train on an empty dataset")
    if not np.all((y == 0) | (y == 1)):
        raise RuncountError("labels must be 0 or 1")
    if y.min() == y.max():
        raise SingleClassError("training data contains a single class")
    return y.astype(float)


class DecisionTreeClassifier:
    def __init__(self, max_depth=3, min_samples_leaf=1):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.tree = None

    def fit(self, X, y, seed=0):
        self.tree = grow_tree(X, _check_binary(y), self.max_depth, self.min_samples_leaf)
        return self

    def predict(self, X):
        return (self.tree.predict(X) >= 0.5).astype(int)

    def payload(self):
        return {"tree": self.tree.to_dict()}

    def load_payload(self, payload):
        self.tree = Tree.from_dict(payload["tree"])
        return self


class RandomForestClassifier:
    """Bagged CART trees with per-split feature subsampling and majority vote."""

    def __init__(self, n_trees=100, max_depth=6, min_samples_leaf=1, max_features="sqrt", bootstrap=True):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.trees = []

    def _n_split_features(self, n_features):
        if self.max_features == "sqrt":
            return math.ceil(math.sqrt(n_features))
        if self.max_features is None:
            return None
        return int(self.max_features)

    def fit(self, X, y, seed=0):
        X = np.asarray(X, dtype=float)
        y = _check_binary(y)
        k = self._n_split_features(X.shape[1])
        self.trees = []
        for t in range(self.n_trees):
            rng = np.random.default_rng([seed, t])
            rows = rng.integers(0, y.size, y.size) if self.bootstrap else np.arange(y.size)
            self.trees.append(grow_tree(X[rows], y[rows], self.max_depth, self.min_samples_leaf, k, rng))
        return self

    def predict(self, X):
        votes = sum((t.predict(X) >= 0.5).astype(int) for t in self.trees)
        return (2 * votes >= len(self.trees)).astype(int)

    def payload(self):
        return {"trees": [t.to_dict() for t in self.trees]}

    def load_payload(self, payload):
        self.trees = [Tree.from_dict(t) for t in payload["trees"]]
        return self


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def logistic_loss(y, score):
    """Mean log-loss of 0/1 labels under raw scores."""
    return float(np.mean(np.logaddexp(0.0, score) - y * score))


class GradientBoostingClassifier:
    """Logistic-loss gradient boosting with shallow least-squares trees.

    Each stage fits the residuals ``y - p`` and moves by ``learning_rate``
    times the leaf-mean residual. Since the logistic loss has curvature at
    most 1/4 per row, this step never increases the training loss for
    learning rates below 8.
    """

    def __init__(self, n_trees=100, learning_rate=0.1, max_depth=3, min_samples_leaf=1):
        self.n_trees = n_trees
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.init_score = 0.0
        self.trees = []
        self.loss_curve = []

    def fit(self, X, y, seed=0):
        X = np.asarray(X, dtype=float)
        y = _check_binary(y)
        p = y.mean()
        self.init_score = math.log(p / (1.0 - p))
        score = np.full(y.size, self.init_score)
        self.trees, self.loss_curve = [], [logistic_loss(y, score)]
        for _ in range(self.n_trees):
            tree = grow_tree(X, y - _sigmoid(score), self.max_depth, self.min_samples_leaf)
            score = score + self.learning_rate * tree.predict(X)
            self.trees.append(tree)
            self.loss_curve.append(logistic_loss(y, score))
        return self

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        score = np.full(X.shape[0], self.init_score)
        for tree in self.trees:
            score = score + self.learning_rate * tree.predict(X)
        return score

    def predict(self, X):
        return (_sigmoid(self.decision_function(X)) >= 0.5).astype(int)

    def payload(self):
        return {"init_score": self.init_score, "trees": [t.to_dict() for t in self.trees]}

    def load_payload(self, payload):
        self.init_score = float(payload["init_score"])
        self.trees = [Tree.from_dict(t) for t in payload["trees"]]
        return self


class MajorityBaseline:
    """Constant prediction of the majority training label; ties go to 1."""

    def __init__(self):
        self.label = 1

    def fit(self, X, y, seed=0):
        y = np.asarray(y)
        if y.size == 0:
            raise RuncountError("cannot train on an empty dataset")
        self.label = int(np.sum(y == 1) >= np.sum(y == 0))
        return self

    def predict(self, X):
        return np.full(np.asarray(X).shape[0], self.label, dtype=int)

    def payload(self):
        return {"label": self.label}

    def load_payload(self, payload):
        self.label = int(payload["label"])
        return self


_CONSTRUCTORS = {
    Family.DECISION_TREE: DecisionTreeClassifier,
    Family.RANDOM_FOREST: RandomForestClassifier,
    Family.GRADIENT_BOOSTING: GradientBoostingClassifier,
    Family.MAJORITY_BASELINE: MajorityBaseline,
}


@dataclass(frozen=True)
class LearnerSpec:
    family: Family
    params: dict = field(default_factory=dict)

    def build(self):
        return _CONSTRUCTORS[self.family](**self.params)

    def complexity(self):
        """Ordering key for tie-breaks: (tree count, depth)."""
        return (self.params.get("n_trees", 1), self.params.get("max_depth", 0))

    def describe(self):
        return ";".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))


def feature_checksum(names):
    return hashlib.sha256("\x1f".join(names).encode("utf-8")).hexdigest()[:16]


@dataclass
class Model:
    spec: LearnerSpec
    seed: int
    feature_names: tuple
    estimator: object

    @property
    def feature_checksum(self):
        return feature_checksum(self.feature_names)


def train(spec, train_set, seed=0):
    record_access("train", train_set.ids)
    est = spec.build().fit(train_set.X, train_set.y, seed=seed)
    return Model(spec, seed, tuple(train_set.feature_names), est)


def predict(model, rows, feature_names=None):
    """Predict labels for a LabeledDataset or a feature matrix.

    Matrices are assumed to use the canonical feature order unless
    ``feature_names`` says otherwise.
    """
    if hasattr(rows, "feature_names"):
        names, X = rows.feature_names, rows.X
    else:
        names, X = feature_names or FEATURE_NAMES, np.asarray(rows, dtype=float)
    if feature_checksum(names) != model.feature_checksum:
        raise ModelMismatch("feature ordering does not match the trained model")
    if X.shape[0] == 0:
        return np.empty(0, dtype=int)
    return model.estimator.predict(X.reshape(X.shape[0], -1))


def f1(precision, recall):
    return 0.0 if precision + recall == 0 else 2.0 * precision * recall / (precision + recall)


def _ratio(a, b):
    return a / b if b else 0.0


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision_1(self):
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall_1(self):
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1_1(self):
        return f1(self.precision_1, self.recall_1)

    @property
    def precision_0(self):
        return _ratio(self.tn, self.tn + self.fn)

    @property
    def recall_0(self):
        return _ratio(self.tn, self.tn + self.fp)

    @property
    def f1_0(self):
        return f1(self.precision_0, self.recall_0)

    def as_row(self):
        return [self.precision_1, self.recall_1, self.f1_1, self.precision_0, self.recall_0, self.f1_0]


METRIC_COLUMNS = ["precision_1", "recall_1", "f1_1", "precision_0", "recall_0", "f1_0"]


def evaluate(predicted, actual):
    """Confusion counts with class 1 as the positive class."""
    p = np.asarray(predicted).astype(int)
    a = np.asarray(actual).astype(int)
    if p.shape != a.shape:
        raise RuncountError(f"length mismatch: {p.size} predictions for {a.size} labels")
    if a.size == 0:
        raise RuncountError("cannot evaluate zero predictions")
    return MetricsReport(
        tp=int(np.sum((p == 1) & (a == 1))),
        fp=int(np.sum((p == 1) & (a == 0))),
        tn=int(np.sum((p == 0) & (a == 0))),
        fn=int(np.sum((p == 0) & (a == 1))),
    )


def model_to_dict(model):
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "family": model.spec.family.value,
        "params": model.spec.params,
        "seed": model.seed,
        "feature_names": list(model.feature_names),
        "feature_checksum": model.feature_checksum,
        "payload": model.estimator.payload(),
    }


def model_from_dict(d):
    if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
        raise RuncountError(f"unsupported model format {d.get('format')!r} v{d.get('version')!r}")
    spec = LearnerSpec(family_from_name(d["family"]), dict(d["params"]))
    names = tuple(d["feature_names"])
    if feature_checksum(names) != d["feature_checksum"]:
        raise ModelMismatch("stored feature checksum does not match stored feature names")
    return Model(spec, int(d["seed"]), names, spec.build().load_payload(d["payload"]))


def dumps_model(model):
    return json.dumps(model_to_dict(model), sort_keys=True)


def loads_model(text):
    return model_from_dict(json.loads(text))
