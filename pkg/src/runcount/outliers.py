"""Robust outlier flagging used before the symmetry check.

Three detectors are supported, addressed by the dataset method codes
``1`` (IQR fences), ``2`` (percentile trimming) and ``3`` (modified
z-score). Values lying exactly on a fence are kept.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import stats
from .errors import RuncountError

MODZ_CONSTANT = 0.6745


class OutlierKind(Enum):
    IQR = "IQR"
    PERCENTILE = "Percentile"
    MODIFIED_Z = "ModifiedZ"


@dataclass(frozen=True)
class OutlierMethod:
    kind: OutlierKind
    k: float = 1.5
    lower: float = 5.0
    upper: float = 95.0
    t: float = 3.5

    def __post_init__(self):
        if self.k <= 0:
            raise RuncountError(f"IQR multiplier must be positive, got {self.k}")
        if not 0.0 <= self.lower < self.upper <= 100.0:
            raise RuncountError(f"invalid percentile bounds ({self.lower}, {self.upper})")
        if self.t <= 0:
            raise RuncountError(f"modified z threshold must be positive, got {self.t}")

    @property
    def code(self):
        return METHOD_CODES[self.kind]


METHOD_CODES = {OutlierKind.IQR: 1, OutlierKind.PERCENTILE: 2, OutlierKind.MODIFIED_Z: 3}


def iqr_method(k=1.5):
    return OutlierMethod(OutlierKind.IQR, k=k)


def percentile_method(lower=5.0, upper=95.0):
    return OutlierMethod(OutlierKind.PERCENTILE, lower=lower, upper=upper)


def modified_z_method(t=3.5):
    return OutlierMethod(OutlierKind.MODIFIED_Z, t=t)


def method_from_code(code):
    """Map a dataset method code (``1``, ``2``, ``3`` or their strings) to defaults."""
    factories = {1: iqr_method, 2: percentile_method, 3: modified_z_method}
    try:
        return factories[int(code)]()
    except (KeyError, ValueError):
        raise RuncountError(f"unknown outlier method code {code!r}; expected 1, 2 or 3") from None


@dataclass(frozen=True)
class OutlierMask:
    flags: tuple

    @property
    def kept_count(self):
        return len(self.flags) - sum(self.flags)

    def __len__(self):
        return len(self.flags)


def detect(sample, method):
    x = stats.as_sample(sample)
    xs = np.sort(x)
    if method.kind is OutlierKind.IQR:
        q25 = stats._quantile_sorted(xs, 0.25)
        q75 = stats._quantile_sorted(xs, 0.75)
        spread = method.k * (q75 - q25)
        flags = (x < q25 - spread) | (x > q75 + spread)
    elif method.kind is OutlierKind.PERCENTILE:
        lo = stats._quantile_sorted(xs, method.lower / 100.0)
        hi = stats._quantile_sorted(xs, method.upper / 100.0)
        flags = (x < lo) | (x > hi)
    else:
        med = stats._quantile_sorted(xs, 0.5)
        dev = np.abs(x - med)
        mad = stats._quantile_sorted(np.sort(dev), 0.5)
        if mad == 0.0:
            flags = np.zeros(x.size, dtype=bool)
        else:
            # a subnormal MAD can overflow the score to inf, which still compares correctly
            with np.errstate(over="ignore"):
                flags = MODZ_CONSTANT * dev / mad > method.t
    return OutlierMask(tuple(bool(f) for f in flags))


def filter_sample(sample, mask):
    """Return the unflagged values of ``sample`` in their original order."""
    x = stats.as_sample(sample)
    if len(mask) != x.size:
        raise RuncountError(f"mask length {len(mask)} does not match sample length {x.size}")
    keep = ~np.asarray(mask.flags, dtype=bool)
    if not keep.any():
        raise RuncountError("empty after filtering")
    return x[keep]
