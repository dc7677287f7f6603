"""Competing inverse-weight constructions: naive inversion, trimming, Platt scaling, dropping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, ScoreTable
from .errors import ConvergenceError, EmptyArmError, ValidationError
from .nuisance import expit, fit_logistic, logit
from .validation import check_same_length, freeze

__all__ = [
    "TrimSpec",
    "PlattModel",
    "invert_weights",
    "trim_fixed",
    "trim_adaptive",
    "platt_calibrate",
    "dropping_mask",
]

TRIM_DEFAULT = 0.01
GRID_STEP_DEFAULT = 0.001
PLATT_RIDGE_DEFAULT = 1e-6
LOGIT_CLAMP = 36.0


@dataclass(frozen=True)
class TrimSpec:
    """A symmetric truncation threshold, fixed or fitted on a grid."""

    mode: str
    c: float
    grid_step: float = GRID_STEP_DEFAULT

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise ValidationError(f"unknown trim mode {self.mode!r}")
        if not (0.0 <= self.c <= 0.5):
            raise ValidationError(f"trim threshold must lie in [0, 0.5], got {self.c}")
        if self.grid_step <= 0.0:
            raise ValidationError("grid_step must be positive")


@dataclass(frozen=True)
class PlattModel:
    """Logistic recalibration sigmoid(intercept + slope * logit(score))."""

    intercept: float
    slope: float
    ridge: float

    def __post_init__(self):
        if not (np.isfinite(self.intercept) and np.isfinite(self.slope)):
            raise ValidationError("Platt parameters must be finite")
        if self.ridge < 0.0:
            raise ValidationError("ridge must be nonnegative")

    def predict(self, scores) -> np.ndarray:
        z = logit(np.asarray(scores, dtype=float), LOGIT_CLAMP)
        return expit(self.intercept + self.slope * z)


def _level_scores(scores: ScoreTable, level: int) -> np.ndarray:
    if level not in scores.scores:
        raise ValidationError(f"score table has no level {level} (levels: {scores.levels})")
    return scores.scores[level]


def invert_weights(scores: ScoreTable, level: int) -> np.ndarray:
    """Elementwise reciprocal of the scores for one level; zero scores are rejected."""
    pi = _level_scores(scores, level)
    zeros = np.flatnonzero(pi == 0.0)
    if zeros.size:
        raise ValidationError(f"cannot invert a zero score at row {int(zeros[0]) + 1}")
    return 1.0 / pi


def trim_fixed(scores: ScoreTable, level: int, c: float = TRIM_DEFAULT) -> np.ndarray:
    """Inverse weights after clamping scores into [c, 1 - c]."""
    if not (0.0 <= c <= 0.5):
        raise ValidationError(f"trim threshold must lie in [0, 0.5], got {c}")
    pi = _level_scores(scores, level)
    clamped = np.clip(pi, c, 1.0 - c)
    with np.errstate(divide="ignore"):
        return 1.0 / clamped


def _adaptive_criterion(a: np.ndarray, pi1: np.ndarray, pi0: np.ndarray, c: float) -> float:
    """Empirical risk of the signed truncated weights at threshold c.

    Non-finite values (possible at c = 0 with boundary scores) propagate to the
    caller, which skips those grid points.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w1 = 1.0 / np.clip(pi1, c, 1.0 - c)
        w0 = 1.0 / np.clip(pi0, c, 1.0 - c)
        own = np.where(a == 1, w1, w0)
        return float(np.sum(own**2) - 2.0 * np.sum(w1 + w0))


def trim_adaptive(
    data: Dataset, scores: ScoreTable, grid_step: float = GRID_STEP_DEFAULT
) -> tuple[TrimSpec, np.ndarray, np.ndarray]:
    """Grid-search the truncation threshold minimizing the quadratic weight risk.

    Scans c in {0, grid_step, ..., 0.5}, skipping thresholds with a non-finite
    criterion, and breaks ties toward the smallest c.  Returns the fitted
    threshold and the clamped-inverse weight sequences for both arms.
    """
    if grid_step <= 0.0:
        raise ValidationError("grid_step must be positive")
    levels = set(data.levels)
    if not levels <= {0, 1}:
        raise ValidationError("adaptive trimming requires binary treatment")
    if not scores.complementary:
        raise ValidationError("adaptive trimming requires complementary scores")
    pi1 = _level_scores(scores, 1)
    pi0 = _level_scores(scores, 0)
    check_same_length(treatment=data.treatment, scores=pi1)
    a = data.treatment
    n_steps = int(np.floor(0.5 / grid_step + 1e-12))
    grid = np.minimum(np.arange(n_steps + 1) * grid_step, 0.5)
    best_c, best_val = None, np.inf
    for c in grid:
        value = _adaptive_criterion(a, pi1, pi0, float(c))
        if np.isfinite(value) and value < best_val:
            best_c, best_val = float(c), value
    if best_c is None:  # pragma: no cover - c = 0.5 always yields a finite criterion
        raise ConvergenceError("adaptive trimming found no finite criterion value on the grid")
    spec = TrimSpec(mode="adaptive", c=best_c, grid_step=grid_step)
    return spec, trim_fixed(scores, 1, best_c), trim_fixed(scores, 0, best_c)


def _check_separation(z: np.ndarray, y: np.ndarray) -> None:
    """Reject perfectly separated recalibration data when unpenalized."""
    z1, z0 = z[y == 1.0], z[y == 0.0]
    if z1.min() > z0.max() or z1.max() < z0.min():
        raise ConvergenceError(
            "unpenalized Platt fit on perfectly separated scores has no finite optimum; "
            "use a positive ridge"
        )


def platt_calibrate(
    data: Dataset, scores: ScoreTable, level: int, ridge: float = PLATT_RIDGE_DEFAULT
) -> tuple[PlattModel, np.ndarray]:
    """Platt scaling of the scores for one level, inverted into weights.

    Fits sigmoid(intercept + slope * logit(score)) to the arm indicator by
    penalized Newton-Raphson; weights are reciprocals of fitted probabilities
    clamped below by the smallest fitted probability within the arm, mirroring
    the calibration module's truncation.
    """
    pi = _level_scores(scores, level)
    check_same_length(treatment=data.treatment, scores=pi)
    y = (data.treatment == level).astype(float)
    if y.min() == y.max():
        raise EmptyArmError(f"Platt scaling needs rows both in and out of level {level}")
    z = logit(pi, LOGIT_CLAMP)
    if ridge == 0.0:
        _check_separation(z, y)
    design = np.column_stack([np.ones_like(z), z])
    beta = fit_logistic(design, y, ridge=ridge)
    fitted = expit(design @ beta)
    model = PlattModel(intercept=float(beta[0]), slope=float(beta[1]), ridge=ridge)
    floor = fitted[y == 1.0].min()
    return model, 1.0 / np.maximum(floor, fitted)


def dropping_mask(scores: ScoreTable, c: float = TRIM_DEFAULT) -> np.ndarray:
    """Rows retained when excluding extreme scores: pi1 within [c, 1 - c]."""
    if not (0.0 <= c <= 0.5):
        raise ValidationError(f"drop threshold must lie in [0, 0.5], got {c}")
    pi1 = _level_scores(scores, 1)
    mask = (pi1 >= c) & (pi1 <= 1.0 - c)
    return freeze(mask)
