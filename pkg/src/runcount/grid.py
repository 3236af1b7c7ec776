"""Configuration keys and the method x threshold x optimizer grid."""

import csv
from dataclasses import dataclass

from .errors import RuncountError

METHOD_CODES = (1, 2, 3)
THRESHOLDS = (0.05, 0.1, 0.15, 0.2)
PORTFOLIO = (
    "DE",
    "DiagonalCMA",
    "NaiveIsoEMNA",
    "NGOpt14",
    "NGOpt38",
    "OnePlusOne",
    "modCMA",
    "modDE",
    "PSO",
    "RandomSearch",
    "RCobyla",
)


@dataclass(frozen=True, order=True)
class ConfigKey:
    method_code: int
    tau: float
    algorithm: str

    def __post_init__(self):
        if self.method_code not in METHOD_CODES:
            raise RuncountError(f"method code must be one of {METHOD_CODES}, got {self.method_code}")
        if not self.tau > 0:
            raise RuncountError(f"tau must be positive, got {self.tau}")
        if not self.algorithm:
            raise RuncountError(f"invalid algorithm name {self.algorithm!r}")

    def __str__(self):
        return f"{self.method_code}_{self.tau!r}_{self.algorithm}"

    @classmethod
    def parse(cls, text):
        """Parse the canonical ``<method>_<tau>_<algorithm>`` form, e.g. ``1_0.15_NGOpt14``."""
        parts = text.split("_", 2)
        if len(parts) != 3:
            raise RuncountError(f"malformed configuration key {text!r}")
        try:
            return cls(int(parts[0]), float(parts[1]), parts[2])
        except ValueError:
            raise RuncountError(f"malformed configuration key {text!r}") from None


def make_grid(methods=METHOD_CODES, thresholds=THRESHOLDS, algorithms=PORTFOLIO):
    """Enumerate keys method-major, then threshold, then algorithm."""
    return [ConfigKey(m, float(t), a) for m in methods for t in thresholds for a in algorithms]


def full_grid():
    return make_grid()


def read_grid(path):
    """Read a custom grid CSV with columns method_code, tau, algorithm."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise RuncountError(f"grid file {path} has no rows")
    try:
        return [ConfigKey(int(r["method_code"]), float(r["tau"]), r["algorithm"]) for r in rows]
    except KeyError as exc:
        raise RuncountError(f"grid file {path} lacks column {exc}") from None


def resolve_grid(spec):
    """``"paper"`` expands to the full grid; anything else is a grid CSV path."""
    return full_grid() if spec == "paper" else read_grid(spec)
