"""Online run-count estimation.

Runs are pulled one at a time from a provider. After the initial batch,
each step filters outliers from the current sample and stops as soon as
the filtered sample's skewness magnitude is within the threshold. The
retained sample always keeps every pulled value, outliers included.
"""

import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import outliers, stats
from .errors import ProviderExhausted, RuncountError

THRESHOLDS = (0.05, 0.10, 0.15, 0.20)


class Decision(Enum):
    STOP = "stop"
    CONTINUE = "continue"


class StopReason(Enum):
    SKEWNESS_WITHIN_THRESHOLD = "SkewnessWithinThreshold"
    RUN_CAP_REACHED = "RunCapReached"


@dataclass(frozen=True)
class EstimatorConfig:
    tau: float
    method: outliers.OutlierMethod = field(default_factory=outliers.iqr_method)
    n0: int = 10
    n_max: int = 50
    min_filtered: int = 5

    def __post_init__(self):
        if not self.tau > 0:
            raise RuncountError(f"tau must be positive, got {self.tau}")
        if not 3 <= self.min_filtered <= self.n0 <= self.n_max:
            raise RuncountError(
                "require 3 <= min_filtered <= n0 <= n_max, got "
                f"min_filtered={self.min_filtered}, n0={self.n0}, n_max={self.n_max}"
            )


@dataclass(frozen=True)
class StepRecord:
    step_n: int
    filtered_count: int
    skewness: float | None
    decision: Decision

    @property
    def degenerate(self):
        return self.skewness is None


@dataclass(frozen=True)
class EstimationResult:
    estimated_n: int
    reached_max: bool
    stop_reason: StopReason
    trace: tuple
    sample: tuple


def check_stop(sample, config):
    """Evaluate one stopping step on the current sample."""
    x = stats.as_sample(sample)
    if x.size < config.n0:
        raise RuncountError(f"sample has {x.size} values, fewer than n0={config.n0}")
    centered = x - x.mean()
    mask = outliers.detect(centered, config.method)
    kept = centered[~np.asarray(mask.flags, dtype=bool)]
    count = int(kept.size)
    g1 = None
    if count >= 3:
        shape = stats.shape_moments(kept)
        if shape is not None:
            g1 = shape[0]
    stop = g1 is not None and abs(g1) <= config.tau and count >= config.min_filtered
    return StepRecord(x.size, count, g1, Decision.STOP if stop else Decision.CONTINUE)


def _pull(it):
    try:
        v = float(next(it))
    except StopIteration:
        raise ProviderExhausted("provider exhausted") from None
    if not math.isfinite(v):
        raise RuncountError(f"provider yielded non-finite value {v}")
    return v


def estimate_runs(provider, config):
    """Grow the sample until the symmetry check passes or the run cap is hit.

    ``provider`` is any iterable of run outcomes; it is consumed lazily so
    that run ``n + 1`` is only requested once step ``n`` said continue.
    """
    it = iter(provider)
    values = [_pull(it) for _ in range(config.n0)]
    trace = []
    while True:
        rec = check_stop(values, config)
        trace.append(rec)
        if rec.decision is Decision.STOP:
            reason = StopReason.SKEWNESS_WITHIN_THRESHOLD
            break
        if len(values) >= config.n_max:
            reason = StopReason.RUN_CAP_REACHED
            break
        values.append(_pull(it))
    return EstimationResult(
        estimated_n=len(values),
        reached_max=reason is StopReason.RUN_CAP_REACHED,
        stop_reason=reason,
        trace=tuple(trace),
        sample=tuple(values),
    )


def write_trace(result, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["step_n", "filtered_count", "skewness", "decision"])
    for rec in result.trace:
        w.writerow([rec.step_n, rec.filtered_count, "" if rec.degenerate else repr(rec.skewness), rec.decision.value])
