from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.stats import pearsonr

from s3rr.exceptions import DegenerateRangeError, UndefinedCorrelationError


def pearson(xs: Sequence[float] | np.ndarray, ys: Sequence[float] | np.ndarray) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"pearson needs two equal-length vectors, got {xs.shape} and {ys.shape}")
    if xs.size < 2:
        raise UndefinedCorrelationError("undefined correlation: fewer than 2 samples")
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        raise UndefinedCorrelationError("undefined correlation: zero variance")
    return float(pearsonr(xs, ys).statistic)


def normalize_to_range(
    values: Sequence[float] | np.ndarray, target_lo: float, target_hi: float
) -> np.ndarray:
    """Affine map sending ``[min(values), max(values)]`` onto ``[target_lo, target_hi]``."""
    values = np.asarray(values, dtype=float)
    if not target_hi > target_lo:
        raise DegenerateRangeError(f"target range [{target_lo}, {target_hi}] is empty")
    lo, hi = float(np.min(values)), float(np.max(values))
    if not hi > lo:
        raise DegenerateRangeError(f"cannot rescale values with a degenerate range [{lo}, {hi}]")
    scaled = target_lo + (values - lo) * ((target_hi - target_lo) / (hi - lo))
    # pin the endpoints against rounding
    scaled[values == lo] = target_lo
    scaled[values == hi] = target_hi
    return scaled


@dataclass(frozen=True)
class TrialSummary:
    n: int
    median: float
    mean: float
    std: float

    def to_dict(self) -> dict[str, float | int]:
        return {"n": self.n, "median": self.median, "mean": self.mean, "std": self.std}


def summarize_trials(values: Sequence[float]) -> TrialSummary:
    """Median and mean ± population std over independent seeds."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no trial values to summarize")
    return TrialSummary(
        n=int(values.size),
        median=float(np.median(values)),
        mean=float(np.mean(values)),
        std=float(np.std(values)),
    )
