"""Cross-fitted nuisance learners: logistic propensity and least-squares outcome models.

These in-repo learners are intentionally simple (polynomial basis, ridge
1e-8 for numerical safety) and exist so the rest of the pipeline can run
without an external score file; externally produced scores enter through
the scores CSV instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, FoldAssignment, ScoreTable
from .errors import ConvergenceError, EmptyArmError, ValidationError
from .validation import freeze

__all__ = [
    "LinearModel",
    "expit",
    "logit",
    "fit_logistic",
    "basis_expand",
    "fit_propensity_crossfit",
    "fit_outcome_crossfit",
]

RIDGE_DEFAULT = 1e-8
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 100


def expit(eta):
    """Numerically stable logistic sigmoid."""
    eta = np.asarray(eta, dtype=float)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ez = np.exp(eta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def logit(p, clamp: float = 36.0):
    """Log-odds with the input clamped away from 0 and 1 to avoid overflow."""
    p = np.asarray(p, dtype=float)
    lo, hi = expit(-clamp), expit(clamp)
    p = np.clip(p, lo, hi)
    out = np.log(p) - np.log1p(-p)
    return np.clip(out, -clamp, clamp)


@dataclass(frozen=True)
class LinearModel:
    """Coefficients of a fitted generalized linear model (intercept first)."""

    coefficients: np.ndarray
    family: str
    basis_degree: int

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float)
        if not np.all(np.isfinite(coef)):
            raise ValidationError("model coefficients must be finite")
        if self.family not in ("logistic", "gaussian"):
            raise ValidationError(f"unknown family {self.family!r}")
        if self.basis_degree not in (1, 2):
            raise ValidationError(f"basis degree must be 1 or 2, got {self.basis_degree}")
        object.__setattr__(self, "coefficients", freeze(coef))


def basis_expand(w: np.ndarray, degree: int) -> np.ndarray:
    """Polynomial feature expansion: degree 1 passes through, degree 2 appends
    squares then pairwise products in index order."""
    if degree not in (1, 2):
        raise ValidationError(f"basis degree must be 1 or 2, got {degree}")
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if degree == 1:
        return w
    d = w.shape[1]
    squares = w**2
    pairs = [w[:, i] * w[:, j] for i in range(d) for j in range(i + 1, d)]
    products = np.column_stack(pairs) if pairs else np.empty((w.shape[0], 0))
    return np.hstack([w, squares, products])


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    ridge: float = RIDGE_DEFAULT,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> np.ndarray:
    """Penalized logistic regression by Newton-Raphson.

    Maximizes the log-likelihood minus ridge * ||beta||^2 over a design X that
    already includes the intercept column.  Converges on gradient norm.

    Raises:
        ConvergenceError: singular Hessian, non-finite update, or no
            convergence within ``max_iter`` iterations.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    k = X.shape[1]
    beta = np.zeros(k)
    penalty = 2.0 * ridge * np.eye(k)
    for _ in range(max_iter):
        p = expit(X @ beta)
        grad = X.T @ (y - p) - 2.0 * ridge * beta
        if np.linalg.norm(grad) < tol:
            return beta
        hessian = (X.T * (p * (1.0 - p))) @ X + penalty
        try:
            step = np.linalg.solve(hessian, grad)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"logistic fit failed: singular Hessian ({exc})") from None
        if not np.all(np.isfinite(step)):
            raise ConvergenceError("logistic fit diverged: non-finite Newton update")
        beta = beta + step
    raise ConvergenceError(f"logistic fit did not converge in {max_iter} iterations")


def solve_least_squares(X: np.ndarray, y: np.ndarray, ridge: float = RIDGE_DEFAULT) -> np.ndarray:
    """Ridge-stabilized normal equations; rank deficiency is absorbed, not raised."""
    gram = X.T @ X + ridge * np.eye(X.shape[1])
    return np.linalg.solve(gram, X.T @ y)


def _propensity_design(data: Dataset, basis_degree: int, first_covariate_only: bool) -> np.ndarray:
    w = data.covariates[:, :1] if first_covariate_only else data.covariates
    features = basis_expand(w, 1 if first_covariate_only else basis_degree)
    return np.hstack([np.ones((data.n, 1)), features])


def fit_propensity_crossfit(
    data: Dataset,
    folds: FoldAssignment,
    basis_degree: int = 1,
    ridge: float = RIDGE_DEFAULT,
    first_covariate_only: bool = False,
) -> ScoreTable:
    """Out-of-fold propensity scores from per-fold logistic fits.

    Each fold is scored by a model trained on its complement.  For binary
    treatment the returned table is complementary (pi0 = 1 - pi1); for more
    levels a one-vs-rest fit is run per level.  ``first_covariate_only``
    deliberately restricts the model to an intercept plus the first covariate,
    a hook for misspecification experiments where only consistency of the
    best monotone transformation is plausible.

    Raises:
        EmptyArmError: some training complement sees only one class.
    """
    if folds.n != data.n:
        raise ValidationError(f"fold assignment covers {folds.n} rows, dataset has {data.n}")
    design = _propensity_design(data, basis_degree, first_covariate_only)
    levels = data.levels if len(data.levels) > 2 else (1,)
    scores: dict[int, np.ndarray] = {level: np.empty(data.n) for level in levels}
    for level in levels:
        indicator = (data.treatment == level).astype(float)
        for j in range(1, folds.J + 1):
            held_out = folds.fold_of == j
            train = ~held_out
            y_train = indicator[train]
            if y_train.min() == y_train.max():
                raise EmptyArmError(
                    f"training complement of fold {j} contains a single class for level {level}"
                )
            beta = fit_logistic(design[train], y_train, ridge=ridge)
            scores[level][held_out] = expit(design[held_out] @ beta)
    if len(data.levels) <= 2:
        table = {1: scores[1], 0: 1.0 - scores[1]}
        return ScoreTable(folds=folds, scores=table, complementary=True)
    return ScoreTable(folds=folds, scores=scores, complementary=False)


def fit_outcome_crossfit(
    data: Dataset,
    folds: FoldAssignment,
    basis_degree: int = 1,
    ridge: float = RIDGE_DEFAULT,
) -> np.ndarray:
    """Out-of-fold outcome regressions for both potential arms.

    Fits least squares of Y on (1, basis(W), A, A*basis(W)) per training
    complement and predicts each held-out row under both arms.

    Returns:
        Array of shape (n, 2): column 0 is mu-hat(0, W_i), column 1 is
        mu-hat(1, W_i).
    """
    if folds.n != data.n:
        raise ValidationError(f"fold assignment covers {folds.n} rows, dataset has {data.n}")
    features = basis_expand(data.covariates, basis_degree)
    ones = np.ones((data.n, 1))
    a = data.treatment.astype(float)[:, None]
    design = np.hstack([ones, features, a, a * features])
    mu_hat = np.empty((data.n, 2))
    for j in range(1, folds.J + 1):
        held_out = folds.fold_of == j
        train = ~held_out
        a_train = data.treatment[train]
        if not (np.any(a_train == 0) and np.any(a_train == 1)):
            raise EmptyArmError(f"training complement of fold {j} lacks one treatment arm")
        beta = solve_least_squares(design[train], data.outcome[train], ridge=ridge)
        f_out = features[held_out]
        base = np.hstack([ones[held_out], f_out])
        zeros = np.zeros_like(f_out)
        mu_hat[held_out, 0] = np.hstack([base, np.zeros((f_out.shape[0], 1)), zeros]) @ beta
        mu_hat[held_out, 1] = np.hstack([base, np.ones((f_out.shape[0], 1)), f_out]) @ beta
    return mu_hat
