"""The 23-feature summary of one run sample.

Order-free statistics come first; the last four (slope, rolling_std,
fft_energy, autocorr1) read the values in arrival order.
"""

import csv
import math
from typing import NamedTuple

import numpy as np

from . import stats
from .errors import InsufficientSample, RuncountError
from .fileio import atomic_open
from .synth import read_labels, read_runs

ROLLING_WINDOW = 5


class FeatureVector(NamedTuple):
    mean: float
    median: float
    std: float
    variance: float
    min: float
    max: float
    range: float
    q25: float
    q75: float
    iqr: float
    mad: float
    cv: float
    skewness: float
    kurtosis: float
    entropy: float
    sum: float
    sum_abs: float
    energy: float
    rms: float
    slope: float
    rolling_std: float
    fft_energy: float
    autocorr1: float


FEATURE_NAMES = FeatureVector._fields
ORDER_SENSITIVE = ("slope", "rolling_std", "fft_energy", "autocorr1")


def slope(sample):
    """OLS slope of value against run index 0..n-1."""
    x = stats.as_sample(sample, min_n=2)
    t = np.arange(x.size, dtype=float)
    tc = t - t.mean()
    return float(np.dot(tc, x - x.mean()) / np.dot(tc, tc))


def rolling_std(sample, window=ROLLING_WINDOW):
    """Mean of the sample std over all contiguous windows of ``window`` runs."""
    if window < 2:
        raise RuncountError(f"window must be >= 2, got {window}")
    x = stats.as_sample(sample, min_n=2)
    if x.size < window:
        return math.sqrt(stats.variance(x))
    views = np.lib.stride_tricks.sliding_window_view(x, window)
    return float(np.std(views, axis=1, ddof=1).mean())


def fft_energy(sample):
    """Non-DC spectral energy ``(1/n) * sum_{k=1}^{n//2} |X_k|^2``."""
    x = stats.as_sample(sample, min_n=2)
    spectrum = np.fft.rfft(x)[1 : x.size // 2 + 1]
    return float(np.sum(spectrum.real**2 + spectrum.imag**2) / x.size)


def autocorr1(sample):
    x = stats.as_sample(sample, min_n=3)
    d = x - x.mean()
    denom = float(np.dot(d, d))
    if denom == 0.0:
        return 0.0
    return float(np.dot(d[:-1], d[1:]) / denom)


def extract(sample):
    try:
        x = stats.as_sample(sample, min_n=3)
    except InsufficientSample:
        raise InsufficientSample("too few runs for features") from None
    s = stats.descriptive(x)
    skew, kurt = stats.shape_moments(x) or (0.0, 0.0)
    energy = float(np.dot(x, x))
    return FeatureVector(
        mean=s.mean,
        median=s.median,
        std=s.std,
        variance=s.variance,
        min=s.min,
        max=s.max,
        range=s.range,
        q25=s.q25,
        q75=s.q75,
        iqr=s.iqr,
        mad=s.mad,
        cv=s.cv,
        skewness=skew,
        kurtosis=kurt,
        entropy=stats.entropy(x),
        sum=float(x.sum()),
        sum_abs=float(np.abs(x).sum()),
        energy=energy,
        rms=math.sqrt(energy / x.size),
        slope=slope(x),
        rolling_std=rolling_std(x),
        fft_energy=fft_energy(x),
        autocorr1=autocorr1(x),
    )


KEY_COLUMNS = ["method_code", "tau", "algorithm", "problem", "instance"]
FEATURES_COLUMNS = KEY_COLUMNS + list(FEATURE_NAMES) + ["estimated_runs", "reached_max", "label"]


def build_features(runs_path, labels_path, out_path):
    """Join runs.csv with labels.csv and write features.csv.

    Each labelled row is featurised on the first ``estimated_runs`` values
    of its stream. Returns the number of rows written.
    """
    runs = read_runs(runs_path)
    labels = read_labels(labels_path)
    with atomic_open(out_path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURES_COLUMNS)
        for row in labels:
            ident = (row["algorithm"], row["problem"], int(row["instance"]))
            if ident not in runs:
                raise RuncountError(f"labels refer to missing runs {ident}")
            n = int(row["estimated_runs"])
            values = runs[ident]
            if n > len(values):
                raise RuncountError(f"{ident}: estimated_runs={n} exceeds the {len(values)} recorded runs")
            vec = extract(values[:n])
            w.writerow([row[c] for c in KEY_COLUMNS] + [repr(float(v)) for v in vec] + [n, row["reached_max"], row["label"]])
    return len(labels)
