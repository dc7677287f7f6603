"""Isotonic calibration of cross-fitted propensity scores into stabilized inverse weights.

The calibrated propensity for a treatment level is the isotonic least-squares
fit of the arm indicator on the pooled out-of-fold scores; inverse weights are
reciprocals of the fitted values, adaptively truncated at the smallest fitted
value observed within the arm so that off-arm boundary rows keep finite
weights while on-arm weights are untouched.  The calibration fit deliberately
pools all rows instead of being cross-fitted.

For binary treatment with complementary scores, a single isotonic fit
suffices: the control-arm fit is the mirror of the treated-arm fit, and both
are recovered from one pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .data import Dataset, ScoreTable
from .errors import EmptyArmError, ValidationError
from .isotonic import BlockFit, StepFunction, WeightedPoints, pava_blocks, step_from_blocks
from .validation import as_float_vector, as_int_vector, check_same_length, check_unit_interval, freeze

__all__ = [
    "Calibrator",
    "CalibratedWeights",
    "calibrate_weights",
    "calibrate_binary",
    "apply_calibrator",
    "IsotonicWeightCalibrator",
]


@dataclass(frozen=True)
class Calibrator:
    """Fitted weight map for one treatment level: x -> 1 / max(c, g(x)).

    ``g`` is the isotonic calibrated propensity and ``c`` the adaptive
    truncation level, frozen at fit time.  The map is nonincreasing with
    values in [1, 1/c].
    """

    g: StepFunction
    c: float
    level: int

    def __post_init__(self):
        if not (0.0 < self.c <= 1.0):
            raise ValidationError(f"truncation level must lie in (0, 1], got {self.c}")

    def weights(self, scores) -> np.ndarray:
        """Evaluate the weight map on new scores in [0, 1]."""
        arr = as_float_vector("scores", np.atleast_1d(np.asarray(scores, dtype=float)))
        check_unit_interval("scores", arr)
        return 1.0 / np.maximum(self.c, self.g(arr))

    def __call__(self, scores) -> np.ndarray:
        return self.weights(scores)


@dataclass(frozen=True)
class CalibratedWeights:
    """Per-row stabilized inverse weights plus the reusable calibrator.

    ``propensity_fit`` holds the untruncated calibrated propensities g(pi_i);
    rows with value zero are off-arm boundary rows whose untruncated weight
    would be infinite.
    """

    alpha: np.ndarray
    level: int
    calibrator: Calibrator
    propensity_fit: np.ndarray

    def __post_init__(self):
        alpha = as_float_vector("alpha", self.alpha)
        fit = as_float_vector("propensity_fit", self.propensity_fit)
        check_same_length(alpha=alpha, propensity_fit=fit)
        if np.any(alpha < 1.0):
            raise ValidationError("calibrated weights must be at least 1")
        object.__setattr__(self, "alpha", freeze(alpha))
        object.__setattr__(self, "propensity_fit", freeze(fit))

    @property
    def n(self) -> int:
        return self.alpha.size


def _block_index(blocks: BlockFit, scores: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(blocks.x_first, scores, side="right") - 1
    return np.clip(idx, 0, blocks.n_blocks - 1)


def _calibrate_arrays(
    scores: np.ndarray, treated: np.ndarray, level: int, min_segment_weight: float
) -> CalibratedWeights:
    """Array-level calibration for one treatment level."""
    if not np.any(treated):
        raise EmptyArmError(f"no rows with treatment level {level}")
    blocks = pava_blocks(
        WeightedPoints(x=scores, y=treated.astype(float)), min_segment_weight, increasing=True
    )
    g_fit = blocks.value[_block_index(blocks, scores)]
    c = float(g_fit[treated].min())
    alpha = 1.0 / np.maximum(c, g_fit)
    calibrator = Calibrator(g=step_from_blocks(blocks), c=c, level=level)
    return CalibratedWeights(alpha=alpha, level=level, calibrator=calibrator, propensity_fit=g_fit)


def calibrate_weights(
    data: Dataset, scores: ScoreTable, level: int, min_segment_weight: float = 0.0
) -> CalibratedWeights:
    """Calibrate inverse weights for one treatment level.

    Fits the isotonic calibrated propensity on the pooled out-of-fold pairs
    (score, arm indicator) with unit weights, truncates at the smallest fitted
    value within the arm, and inverts.  Truncation never changes the weight of
    a row in the requested arm.

    Raises:
        ValidationError: the score table has no column for ``level``.
        EmptyArmError: no row carries the requested level.
    """
    if level not in scores.scores:
        raise ValidationError(f"score table has no level {level} (levels: {scores.levels})")
    check_same_length(treatment=data.treatment, scores=scores.scores[level])
    treated = data.treatment == level
    return _calibrate_arrays(scores.scores[level], treated, level, min_segment_weight)


def calibrate_binary(
    data: Dataset, scores: ScoreTable, min_segment_weight: float = 0.0
) -> tuple[CalibratedWeights, CalibratedWeights]:
    """Calibrate both arms of a binary treatment from a single isotonic fit.

    With complementary scores the control-arm calibrated propensity is the
    mirror 1 - g1(1 - x) of the treated-arm fit, so one regression recovers
    both weight sequences; per-arm truncation matches two independent
    calibrations.

    Returns:
        (treated-arm weights, control-arm weights).
    """
    levels = set(data.levels)
    if not levels <= {0, 1}:
        raise ValidationError(f"binary calibration requires treatment in {{0, 1}}, found {sorted(levels)}")
    if not scores.complementary:
        raise ValidationError(
            "score table is not complementary (pi0 + pi1 != 1); calibrate each level separately"
        )
    check_same_length(treatment=data.treatment, scores=scores.scores[1])
    a1 = data.treatment == 1
    a0 = data.treatment == 0
    if not np.any(a1):
        raise EmptyArmError("no rows with treatment level 1")
    if not np.any(a0):
        raise EmptyArmError("no rows with treatment level 0")

    pi1 = scores.scores[1]
    blocks = pava_blocks(WeightedPoints(x=pi1, y=a1.astype(float)), min_segment_weight)
    idx = _block_index(blocks, pi1)
    g1_fit = blocks.value[idx]
    # Mirror on the control scale: same segments, complement counts, so the
    # fitted values match an independent control-arm fit digit for digit.
    value0 = (blocks.weight - blocks.y_weighted_sum) / blocks.weight
    g0_fit = value0[idx]

    c1 = float(g1_fit[a1].min())
    c0 = float(g0_fit[a0].min())
    alpha1 = 1.0 / np.maximum(c1, g1_fit)
    alpha0 = 1.0 / np.maximum(c0, g0_fit)

    g1 = step_from_blocks(blocks)
    g0 = StepFunction(knots=(1.0 - blocks.x_last)[::-1], values=value0[::-1], direction="increasing")
    treated_arm = CalibratedWeights(
        alpha=alpha1, level=1, calibrator=Calibrator(g=g1, c=c1, level=1), propensity_fit=g1_fit
    )
    control_arm = CalibratedWeights(
        alpha=alpha0, level=0, calibrator=Calibrator(g=g0, c=c0, level=0), propensity_fit=g0_fit
    )
    return treated_arm, control_arm


def apply_calibrator(cal: Calibrator, new_scores) -> np.ndarray:
    """Evaluate a fitted calibrator on new scores in [0, 1]."""
    return cal.weights(new_scores)


class IsotonicWeightCalibrator(BaseEstimator, TransformerMixin):
    """Scikit-learn style wrapper around the single-level weight calibration.

    fit(X, y) takes propensity scores for the configured treatment level
    (as a 1-d array or single-column matrix) and the per-row treatment labels;
    transform(X) maps scores to stabilized inverse weights.

    Parameters
    ----------
    level : int, default 1
        Treatment level whose inverse weights are calibrated.
    min_segment_weight : float, default 0.0
        Minimum total weight per constant segment of the isotonic fit;
        0 disables the constraint and relies on adaptive truncation alone.
    """

    def __init__(self, level: int = 1, min_segment_weight: float = 0.0):
        self.level = level
        self.min_segment_weight = min_segment_weight

    @staticmethod
    def _scores_1d(X) -> np.ndarray:
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 2 and arr.shape[1] == 1:
            arr = arr[:, 0]
        scores = as_float_vector("X", arr)
        check_unit_interval("X", scores)
        return scores

    def fit(self, X, y):
        scores = self._scores_1d(X)
        treatment = as_int_vector("y", y)
        check_same_length(X=scores, y=treatment)
        fitted = _calibrate_arrays(
            scores, treatment == self.level, self.level, self.min_segment_weight
        )
        self.calibrator_ = fitted.calibrator
        self.weights_ = fitted.alpha
        self.propensity_fit_ = fitted.propensity_fit
        self.cutoff_ = fitted.calibrator.c
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "calibrator_"):
            raise ValidationError("calibrator is not fitted; call fit first")
        return self.calibrator_.weights(self._scores_1d(X))

    def predict(self, X) -> np.ndarray:
        return self.transform(X)
