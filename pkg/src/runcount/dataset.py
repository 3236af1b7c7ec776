"""Per-configuration datasets: loading, stratified splitting, z-scoring
and SMOTE oversampling.

The fixed pipeline order is split, fit the normalizer on train, oversample
the normalized train rows, then learn. Test rows are never touched after
the split.
"""

import csv
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .audit import record_access
from .errors import EmptyConfiguration, RuncountError, RuncountWarning, SingleClassError
from .features import FEATURE_NAMES
from .grid import ConfigKey


@dataclass(frozen=True)
class LabeledDataset:
    key: ConfigKey | None
    X: np.ndarray
    y: np.ndarray
    reached_max: np.ndarray
    ids: tuple
    synthetic: np.ndarray = None
    feature_names: tuple = FEATURE_NAMES

    def __post_init__(self):
        n = len(self.ids)
        if self.synthetic is None:
            object.__setattr__(self, "synthetic", np.zeros(n, dtype=bool))
        if self.X.shape != (n, len(self.feature_names)) or self.y.shape != (n,) or self.reached_max.shape != (n,):
            raise RuncountError("inconsistent dataset shapes")

    def __len__(self):
        return len(self.ids)

    def subset(self, index):
        index = np.asarray(index, dtype=int)
        return replace(
            self,
            X=self.X[index],
            y=self.y[index],
            reached_max=self.reached_max[index],
            ids=tuple(self.ids[i] for i in index),
            synthetic=self.synthetic[index],
        )

    def class_counts(self):
        return int(np.sum(self.y == 0)), int(np.sum(self.y == 1))


def load_features(path):
    """Read features.csv into ``{ConfigKey: LabeledDataset}`` preserving file order."""
    grouped = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in FEATURE_NAMES if c not in (reader.fieldnames or [])]
        if missing:
            raise RuncountError(f"{path}: missing feature columns {missing}")
        for row in reader:
            key = ConfigKey(int(row["method_code"]), float(row["tau"]), row["algorithm"])
            grouped.setdefault(key, []).append(row)
    out = {}
    for key, rows in grouped.items():
        out[key] = LabeledDataset(
            key=key,
            X=np.array([[float(r[c]) for c in FEATURE_NAMES] for r in rows]),
            y=np.array([int(r["label"]) for r in rows], dtype=int),
            reached_max=np.array([r["reached_max"] in ("1", "true", "True") for r in rows], dtype=bool),
            ids=tuple(f"{r['problem']}/{r['instance']}" for r in rows),
        )
    return out


def assemble(features_path, key):
    ds = load_features(features_path).get(key)
    if ds is None:
        raise EmptyConfiguration(f"empty configuration: no rows for {key}")
    return ds


@dataclass(frozen=True)
class SplitPair:
    train: LabeledDataset
    test: LabeledDataset


def strata_of(ds):
    """Composite stratum per row: 0 for label 0, 1 for label 1, 2 for label 1 at the run cap."""
    return np.where(ds.y == 0, 0, np.where(ds.reached_max, 2, 1))


def _allocate(sizes, fraction):
    raw = [fraction * s for s in sizes]
    alloc = []
    for s, r in zip(sizes, raw):
        if s == 1:
            warnings.warn("single-row stratum forced into train", RuncountWarning, stacklevel=3)
            alloc.append(0)
        else:
            alloc.append(min(int(math.floor(r + 0.5)), max(s - 1, 0)))
    target = int(math.floor(fraction * sum(sizes) + 0.5))
    frac = [r - math.floor(r) for r in raw]
    while sum(alloc) > target:
        cands = [i for i in range(len(sizes)) if alloc[i] > 0]
        if not cands:
            break
        alloc[min(cands, key=lambda i: (frac[i], i))] -= 1
    while sum(alloc) < target:
        cands = [i for i in range(len(sizes)) if sizes[i] >= 2 and alloc[i] < sizes[i] - 1]
        if not cands:
            break
        alloc[max(cands, key=lambda i: (frac[i], -i))] += 1
    return alloc


def stratified_split(ds, test_fraction=0.3, seed=0):
    if not 0.0 < test_fraction < 1.0:
        raise RuncountError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    c0, c1 = ds.class_counts()
    if c0 == 0 or c1 == 0:
        raise SingleClassError("single-class dataset")
    strata = strata_of(ds)
    members = [np.flatnonzero(strata == s) for s in (0, 1, 2)]
    members = [m for m in members if m.size]
    alloc = _allocate([m.size for m in members], test_fraction)
    rng = np.random.default_rng(seed)
    test_idx = []
    for m, t in zip(members, alloc):
        test_idx.extend(rng.permutation(m)[:t].tolist())
    is_test = np.zeros(len(ds), dtype=bool)
    is_test[test_idx] = True
    return SplitPair(ds.subset(np.flatnonzero(~is_test)), ds.subset(np.flatnonzero(is_test)))


@dataclass(frozen=True)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        safe = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, (X - self.mean) / safe, 0.0)


def fit_normalizer(train):
    if len(train) == 0:
        raise RuncountError("cannot fit a normalizer on an empty dataset")
    record_access("normalizer_fit", train.ids)
    return Normalizer(train.X.mean(axis=0), train.X.std(axis=0))


def apply_normalizer(normalizer, ds):
    return replace(ds, X=normalizer.transform(ds.X))


def smote(train, k=5, seed=0):
    """Oversample the minority class to parity by neighbour interpolation.

    Synthetic rows sit on segments between a minority row and one of its
    ``k`` nearest minority neighbours (Euclidean). Originals are kept and
    come first; synthetic rows are flagged.
    """
    c0, c1 = train.class_counts()
    if c0 == c1:
        return train
    minority = 0 if c0 < c1 else 1
    m_idx = np.flatnonzero(train.y == minority)
    if m_idx.size < 2:
        warnings.warn("SMOTE skipped: fewer than 2 minority rows", RuncountWarning, stacklevel=2)
        return train
    record_access("smote", train.ids)
    k = min(k, m_idx.size - 1)
    Xm = train.X[m_idx]
    d2 = ((Xm[:, None, :] - Xm[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    neighbours = np.argsort(d2, axis=1, kind="stable")[:, :k]

    n_new = abs(c1 - c0)
    rng = np.random.default_rng(seed)
    base = rng.integers(0, m_idx.size, n_new)
    pick = neighbours[base, rng.integers(0, k, n_new)]
    u = rng.random(n_new)[:, None]
    X_new = Xm[base] + u * (Xm[pick] - Xm[base])
    ids_new = tuple(f"smote:{j}:{train.ids[m_idx[a]]}:{train.ids[m_idx[b]]}" for j, (a, b) in enumerate(zip(base, pick)))
    return LabeledDataset(
        key=train.key,
        X=np.vstack([train.X, X_new]),
        y=np.concatenate([train.y, np.full(n_new, minority)]),
        reached_max=np.concatenate([train.reached_max, np.zeros(n_new, dtype=bool)]),
        ids=train.ids + ids_new,
        synthetic=np.concatenate([train.synthetic, np.ones(n_new, dtype=bool)]),
        feature_names=train.feature_names,
    )


def prepare_training(train, k=5, seed=0):
    """Normalize on ``train`` and oversample; returns (normalizer, enriched train)."""
    normalizer = fit_normalizer(train)
    return normalizer, smote(apply_normalizer(normalizer, train), k=k, seed=seed)


def write_split_manifest(fh, key, split):
    w = csv.writer(fh, lineterminator="\n")
    for part, ds in (("train", split.train), ("test", split.test)):
        for ident in ds.ids:
            w.writerow([str(key), ident, part])
