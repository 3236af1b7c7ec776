"""Synthetic run streams and a declared ground-truth labelling rule.

Stand-in for recorded optimizer outcomes: every (algorithm, problem,
instance) triple gets a deterministic stream of ``n_max`` final
objective values drawn from one of 24 shape templates. Labels come
from replaying the estimator over the stream and comparing the estimated
sample mean against the full-horizon mean.
"""

import csv
import math
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import estimator, outliers
from .errors import RuncountError
from .fileio import atomic_open
from .seeding import derive_seed

N_PROBLEMS = 24
RUNS_COLUMNS = ["algorithm", "problem", "instance", "run_index", "objective"]
LABELS_COLUMNS = ["method_code", "tau", "algorithm", "problem", "instance", "estimated_runs", "reached_max", "label"]


class Family(Enum):
    NORMAL = "Normal"
    LOGNORMAL = "Lognormal"
    SHIFTED_EXPONENTIAL = "ShiftedExponential"
    MIXTURE = "Mixture"
    # exactly mirrored pairs; used to build cells that are separable by construction
    SYMMETRIC_PAIRS = "SymmetricPairs"
    LEVEL_SHIFT = "LevelShift"


@dataclass(frozen=True)
class GeneratorSpec:
    """Distribution of one run stream.

    ``location``/``scale`` are the family's natural parameters (for
    Lognormal, the mean and sigma of the underlying normal). A Mixture
    draws from ``base`` and replaces a fraction ``outlier_rate`` of runs
    with one-sided excursions of size ``outlier_scale * scale``.
    LevelShift mirrors pairs around ``location`` for the first
    ``shift_at`` runs and around ``location + shift`` afterwards.
    """

    family: Family
    location: float = 0.0
    scale: float = 1.0
    seed: int = 0
    base: Family = Family.NORMAL
    outlier_rate: float = 0.0
    outlier_scale: float = 1.0
    shift: float = 0.0
    shift_at: int = 10

    def __post_init__(self):
        if not self.scale > 0:
            raise RuncountError(f"scale must be positive, got {self.scale}")
        if not 0.0 <= self.outlier_rate < 0.5:
            raise RuncountError(f"outlier_rate must lie in [0, 0.5), got {self.outlier_rate}")
        if self.outlier_scale < 1:
            raise RuncountError(f"outlier_scale must be >= 1, got {self.outlier_scale}")
        if self.base in (Family.MIXTURE,):
            raise RuncountError("mixture base must be a plain family")
        if not 0 <= self.seed < 2**64:
            raise RuncountError("seed must be a 64-bit unsigned integer")


def _mirrored(rng, n, centre, scale):
    half = scale * np.abs(rng.standard_normal((n + 1) // 2))
    out = np.empty(2 * half.size)
    out[0::2] = centre - half
    out[1::2] = centre + half
    return out[:n]


def _draw(family, spec, rng, n):
    if family is Family.NORMAL:
        return spec.location + spec.scale * rng.standard_normal(n)
    if family is Family.LOGNORMAL:
        return np.exp(spec.location + spec.scale * rng.standard_normal(n))
    if family is Family.SHIFTED_EXPONENTIAL:
        return spec.location + rng.exponential(spec.scale, n)
    if family is Family.SYMMETRIC_PAIRS:
        return _mirrored(rng, n, spec.location, spec.scale)
    if family is Family.LEVEL_SHIFT:
        head = min(spec.shift_at, n)
        return np.concatenate(
            [_mirrored(rng, head, spec.location, spec.scale), _mirrored(rng, n - head, spec.location + spec.shift, spec.scale)]
        )
    raise RuncountError(f"cannot draw directly from {family}")


def generate(spec, n=50):
    """Deterministic stream of ``n`` values for ``spec``."""
    base_ss, outlier_ss = np.random.SeedSequence(spec.seed).spawn(2)
    rng = np.random.default_rng(base_ss)
    if spec.family is not Family.MIXTURE:
        return _draw(spec.family, spec, rng, n)
    values = _draw(spec.base, spec, rng, n)
    orng = np.random.default_rng(outlier_ss)
    hit = orng.random(n) < spec.outlier_rate
    excursion = spec.outlier_scale * spec.scale * (1.0 + orng.exponential(1.0, n))
    return np.where(hit, values + excursion, values)


class StreamProvider:
    """Iterable run provider over a fixed pre-drawn stream."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def __iter__(self):
        return iter(self.values.tolist())

    def __len__(self):
        return self.values.size


def make_provider(spec, n_max=50):
    return StreamProvider(generate(spec, n_max))


@dataclass(frozen=True)
class SynthLabelRule:
    """Label 1 iff the estimated-sample mean is within ``delta`` standard
    errors of the full-horizon mean."""

    delta: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise RuncountError(f"delta must be positive, got {self.delta}")


def label_estimate(result, full_sample, rule=SynthLabelRule()):
    full = np.asarray(full_sample, dtype=float)
    n_max = full.size
    if result.estimated_n > n_max:
        raise RuncountError(f"estimated_n={result.estimated_n} exceeds the horizon {n_max}")
    if result.reached_max or result.estimated_n == n_max:
        return 1
    head = full[: result.estimated_n]
    std = float(np.std(full, ddof=1)) if n_max > 1 else 0.0
    deviation = abs(float(head.mean()) - float(full.mean()))
    return int(deviation <= rule.delta * std / math.sqrt(n_max))


# (family, location, scale, outlier_rate, outlier_scale); lognormal sigma and
# mixture rates are multiplied by the per-algorithm skew factor
_TEMPLATES = (
    [(Family.NORMAL, 10.0 * p, s, 0.0, 1.0) for p, s in enumerate((0.5, 1.0, 2.0, 0.2, 5.0, 1.5))]
    + [(Family.LOGNORMAL, 0.0, s, 0.0, 1.0) for s in (0.3, 0.5, 0.8, 1.0, 1.3, 1.6)]
    + [(Family.SHIFTED_EXPONENTIAL, 1.0 + p, s, 0.0, 1.0) for p, s in enumerate((0.5, 1.0, 1.5, 2.0, 3.0, 0.2))]
    + [(Family.MIXTURE, 5.0 * p, 1.0, r, o) for p, (r, o) in enumerate(((0.02, 3.0), (0.05, 5.0), (0.08, 4.0), (0.1, 8.0), (0.15, 3.0), (0.2, 10.0)))]
)


def problem_spec(algorithm, problem, instance, base_seed, separable=False):
    """GeneratorSpec for a 0-based problem index and 0-based instance index."""
    if not 0 <= problem < N_PROBLEMS:
        raise RuncountError(f"problem index must lie in [0, {N_PROBLEMS}), got {problem}")
    seed = derive_seed(base_seed, algorithm, problem, instance)
    if separable:
        if problem < 18:
            return GeneratorSpec(Family.SYMMETRIC_PAIRS, location=0.05 * problem, scale=1.0, seed=seed)
        return GeneratorSpec(Family.LEVEL_SHIFT, location=20.0 + 0.1 * problem, scale=1.0, seed=seed, shift=10.0, shift_at=10)
    arng = np.random.default_rng(derive_seed("algorithm-profile", algorithm))
    skew_factor = float(arng.uniform(0.6, 1.6))
    scale_factor = float(arng.uniform(0.5, 2.0))
    family, loc, scale, rate, oscale = _TEMPLATES[problem]
    loc += 0.1 * instance
    if family is Family.LOGNORMAL:
        scale = min(scale * skew_factor, 2.5)
    else:
        scale *= scale_factor
    if family is Family.MIXTURE:
        rate = min(rate * skew_factor, 0.45)
    return GeneratorSpec(family, loc, scale, seed, outlier_rate=rate, outlier_scale=oscale)


def estimate_and_label(stream, key, n0=10, min_filtered=5, rule=SynthLabelRule()):
    config = estimator.EstimatorConfig(
        tau=key.tau, method=outliers.method_from_code(key.method_code), n0=n0, n_max=len(stream), min_filtered=min_filtered
    )
    result = estimator.estimate_runs(StreamProvider(stream), config)
    return result, label_estimate(result, stream, rule)


def generate_corpus(grid, out_dir, per_cell=240, base_seed=0, separable=(), n_max=50, rule=SynthLabelRule()):
    """Write runs.csv and labels.csv for every cell in ``grid``.

    Runs depend only on (algorithm, problem, instance), so cells sharing
    an algorithm share streams and differ only in their labels. Returns
    a dict mapping each cell key string to its (count0, count1).
    """
    if not grid:
        raise RuncountError("empty grid")
    if per_cell <= 0 or per_cell % N_PROBLEMS:
        raise RuncountError(f"per_cell must be a positive multiple of {N_PROBLEMS}, got {per_cell}")
    instances = per_cell // N_PROBLEMS
    separable = set(separable)
    algorithms = list(dict.fromkeys(k.algorithm for k in grid))
    streams = {}
    for alg in algorithms:
        for p in range(N_PROBLEMS):
            for i in range(instances):
                spec = problem_spec(alg, p, i, base_seed, separable=alg in separable)
                streams[alg, p, i] = generate(spec, n_max)

    os.makedirs(out_dir, exist_ok=True)
    with atomic_open(os.path.join(out_dir, "runs.csv")) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUNS_COLUMNS)
        for (alg, p, i), values in streams.items():
            for r, v in enumerate(values.tolist()):
                w.writerow([alg, problem_name(p), i + 1, r, repr(v)])

    counts = {}
    with atomic_open(os.path.join(out_dir, "labels.csv")) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABELS_COLUMNS)
        for key in grid:
            c = [0, 0]
            for p in range(N_PROBLEMS):
                for i in range(instances):
                    result, label = estimate_and_label(streams[key.algorithm, p, i], key, rule=rule)
                    c[label] += 1
                    w.writerow(
                        [key.method_code, repr(key.tau), key.algorithm, problem_name(p), i + 1,
                         result.estimated_n, int(result.reached_max), label]
                    )
            counts[str(key)] = tuple(c)
    return counts


def problem_name(index):
    return f"f{index + 1}"


def read_runs(path):
    """Load runs.csv into ``{(algorithm, problem, instance): values}`` ordered by run_index."""
    runs = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ident = (row["algorithm"], row["problem"], int(row["instance"]))
            runs.setdefault(ident, []).append((int(row["run_index"]), float(row["objective"])))
    return {k: [v for _, v in sorted(rows)] for k, rows in runs.items()}


def read_labels(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
