"""Descriptive and distributional statistics for run samples.

All functions accept any 1-D sequence of finite reals. Moments are the
biased (population) estimators; quantiles use linear interpolation
between order statistics (Hyndman-Fan type 7).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, InsufficientSample, RuncountError

CV_EPS = 1e-12


def as_sample(values, min_n=1):
    """Validate ``values`` and return them as a float64 array."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientSample("empty sample")
    if not np.all(np.isfinite(x)):
        raise RuncountError("sample contains non-finite values")
    if x.size < min_n:
        raise InsufficientSample(f"insufficient sample: need n >= {min_n}, got {x.size}")
    return x


@dataclass(frozen=True)
class StatsSummary:
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


def _quantile_sorted(xs, p):
    h = (xs.size - 1) * p
    lo = int(math.floor(h))
    if lo >= xs.size - 1:
        return float(xs[-1])
    return float(xs[lo] + (h - lo) * (xs[lo + 1] - xs[lo]))


def quantile(sample, p):
    """Type-7 quantile: interpolate at rank ``(n - 1) * p``."""
    if not 0.0 <= p <= 1.0:
        raise RuncountError(f"quantile level must lie in [0, 1], got {p}")
    return _quantile_sorted(np.sort(as_sample(sample)), p)


def median(sample):
    return quantile(sample, 0.5)


def mad(sample):
    """Median absolute deviation from the median (unscaled)."""
    x = as_sample(sample)
    return median(np.abs(x - median(x)))


def variance(sample):
    """Sample variance with the n - 1 denominator; 0 for a single value."""
    x = as_sample(sample)
    if x.size == 1:
        return 0.0
    d = x - x.mean()
    return float(np.dot(d, d) / (x.size - 1))


def descriptive(sample):
    x = as_sample(sample)
    xs = np.sort(x)
    mean = float(x.mean())
    var = variance(x)
    std = math.sqrt(var)
    med = _quantile_sorted(xs, 0.5)
    q25 = _quantile_sorted(xs, 0.25)
    q75 = _quantile_sorted(xs, 0.75)
    lo, hi = float(xs[0]), float(xs[-1])
    return StatsSummary(
        mean=mean,
        median=med,
        std=std,
        variance=var,
        min=lo,
        max=hi,
        range=hi - lo,
        q25=q25,
        q75=q75,
        iqr=q75 - q25,
        mad=_quantile_sorted(np.sort(np.abs(x - med)), 0.5),
        cv=0.0 if abs(mean) < CV_EPS else std / abs(mean),
    )


def shape_moments(sample):
    """Return (g1, excess g2) or None for a zero-variance sample.

    Works on standardised deviations so tiny but non-zero variances do not
    underflow when raised to the 1.5 or 2 power.
    """
    x = as_sample(sample)
    d = x - x.mean()
    m2 = float(np.dot(d, d) / x.size)
    if m2 <= 0.0:
        return None
    z = d / math.sqrt(m2)
    z2 = z * z
    return float((z2 * z).mean()), float((z2 * z2).mean()) - 3.0


def _shape_checked(sample, min_n):
    shape = shape_moments(as_sample(sample, min_n=min_n))
    if shape is None:
        raise DegenerateSample("degenerate sample: zero variance")
    return shape


def skewness(sample):
    """Biased sample skewness g1 = m3 / m2**1.5."""
    return _shape_checked(sample, 3)[0]


def kurtosis(sample):
    """Excess kurtosis g2 = m4 / m2**2 - 3."""
    return _shape_checked(sample, 4)[1]


def entropy(sample, bins=10):
    """Shannon entropy (nats) of an equal-width histogram over [min, max]."""
    if bins < 1:
        raise RuncountError(f"bins must be >= 1, got {bins}")
    x = as_sample(sample)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return 0.0
    idx = np.floor((x - lo) / (hi - lo) * bins).astype(int)
    # the maximum lands on the closed right edge of the last bin
    np.clip(idx, 0, bins - 1, out=idx)
    p = np.bincount(idx, minlength=bins) / x.size
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())
