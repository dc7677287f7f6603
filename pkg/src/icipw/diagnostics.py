"""Calibration and overlap diagnostics for weight sequences.

The balance report works on any weights by grouping rows on exact weight
values; calibrated piecewise-constant weights stabilize to 1 per group while
continuous baselines generally do not.  The oracle metrics require the true
propensities and are meant for simulation studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, ScoreTable
from .errors import EmptyArmError, ValidationError
from .validation import as_float_vector, check_same_length

__all__ = [
    "BalanceRow",
    "BalanceReport",
    "balance_report",
    "chi2_cal_error_oracle",
    "weight_mse_oracle",
    "boundary_count",
]


@dataclass(frozen=True)
class BalanceRow:
    """One weight level set: its value, size, and stabilization deviation."""

    level_value: float
    count: int
    stabilized_mean: float
    deviation: float


@dataclass(frozen=True)
class BalanceReport:
    """Per-level-set stabilization summary for one treatment arm."""

    rows: tuple[BalanceRow, ...]
    max_abs_deviation: float
    level: int

    @property
    def n(self) -> int:
        return sum(r.count for r in self.rows)


def balance_report(data: Dataset, alpha: np.ndarray, level: int) -> BalanceReport:
    """Group rows by exact weight value and check stabilization within groups.

    For each distinct weight t, reports the mean of 1(A = level) * t over the
    group and its deviation from 1.
    """
    alpha = as_float_vector("alpha", alpha)
    check_same_length(treatment=data.treatment, alpha=alpha)
    indicator = (data.treatment == level).astype(float)
    rows = []
    for t in np.unique(alpha):
        members = alpha == t
        stabilized = float(np.mean(indicator[members] * t))
        rows.append(
            BalanceRow(
                level_value=float(t),
                count=int(members.sum()),
                stabilized_mean=stabilized,
                deviation=stabilized - 1.0,
            )
        )
    max_dev = max(abs(r.deviation) for r in rows)
    return BalanceReport(rows=tuple(rows), max_abs_deviation=max_dev, level=level)


def _group_ids(alpha: np.ndarray, bins: int | None) -> np.ndarray:
    if bins is None:
        _, ids = np.unique(alpha, return_inverse=True)
        return ids
    edges = np.quantile(alpha, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    return np.searchsorted(edges, alpha, side="right")


def chi2_cal_error_oracle(alpha, pi0_true, bins: int | None = None) -> float:
    """Plug-in chi-squared calibration error of inverse weights against truth.

    Groups rows by exact weight value (or by ``bins`` weight quantiles for
    continuous-valued weights), averages the true propensity within each
    group, and returns the mean squared relative calibration gap
    mean((group_mean_pi * alpha - 1)^2).
    """
    alpha = as_float_vector("alpha", alpha)
    pi0_true = as_float_vector("pi0_true", pi0_true)
    check_same_length(alpha=alpha, pi0_true=pi0_true)
    ids = _group_ids(alpha, bins)
    n_groups = int(ids.max()) + 1
    sums = np.bincount(ids, weights=pi0_true, minlength=n_groups)
    counts = np.bincount(ids, minlength=n_groups)
    gamma = sums / counts
    return float(np.mean((gamma[ids] * alpha - 1.0) ** 2))


def weight_mse_oracle(alpha, pi0_true, treatment=None, level: int | None = None) -> float:
    """Root mean squared error of weights against the true inverse propensity.

    Computed over all rows regardless of arm; ``treatment``/``level`` are
    accepted for interface parity with the arm-specific callers and do not
    restrict the average.
    """
    alpha = as_float_vector("alpha", alpha)
    pi0_true = as_float_vector("pi0_true", pi0_true)
    check_same_length(alpha=alpha, pi0_true=pi0_true)
    if np.any(pi0_true == 0.0):
        raise ValidationError("true propensity of zero has no finite inverse weight")
    return float(np.sqrt(np.mean((alpha - 1.0 / pi0_true) ** 2)))


def boundary_count(scores: ScoreTable, treatment, level: int) -> int:
    """Count off-arm rows whose score undercuts every on-arm score.

    These are the rows where an isotonic fit can pin the calibrated propensity
    at zero, producing infinite untruncated weights.
    """
    if level not in scores.scores:
        raise ValidationError(f"score table has no level {level} (levels: {scores.levels})")
    pi = scores.scores[level]
    a = np.asarray(treatment)
    check_same_length(treatment=a, scores=pi)
    on_arm = a == level
    if not np.any(on_arm):
        raise EmptyArmError(f"no rows with treatment level {level}")
    threshold = pi[on_arm].min()
    return int(np.sum(~on_arm & (pi < threshold)))
