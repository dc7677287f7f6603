"""ATE estimators over arbitrary weight sequences: IPW, AIPW, and TMLE.

All three report an influence-function-based standard error and a Wald
interval.  The ``se`` field is the sample standard deviation of the estimated
influence values; interval half-width is z * se / sqrt(n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ConvergenceError, EmptyArmError, ValidationError
from .nuisance import expit, logit
from .validation import as_float_vector, check_same_length, freeze

__all__ = ["EstimateReport", "EIFValues", "aipw_ate", "ipw_ate", "tmle_ate", "eif_variance_ci"]

Z_975 = 1.959963984540054
TMLE_TOL = 1e-10
TMLE_MAX_ITER = 50
MU_CLAMP = 1e-6


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate with EIF-based uncertainty and method metadata."""

    psi: float
    se: float
    ci_lower: float
    ci_upper: float
    method: str
    n: int
    eif_mean: float

    def lines(self) -> list[str]:
        """The name=value report rendering (reals at 17 significant digits)."""
        return [
            f"method={self.method}",
            f"psi={self.psi:.17g}",
            f"se={self.se:.17g}",
            f"ci_lower={self.ci_lower:.17g}",
            f"ci_upper={self.ci_upper:.17g}",
            f"n={self.n}",
            f"eif_mean={self.eif_mean:.17g}",
        ]


@dataclass(frozen=True)
class EIFValues:
    """Per-row estimated influence values."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", freeze(as_float_vector("eif", self.values)))

    @property
    def n(self) -> int:
        return self.values.size


def eif_variance_ci(eif: EIFValues, psi: float) -> tuple[float, float, float]:
    """Standard error and Wald interval from influence values.

    Returns (se, ci_lower, ci_upper) with se the sample standard deviation
    (denominator n - 1) of the influence values.
    """
    n = eif.n
    if n < 2:
        raise ValidationError(f"variance estimation needs at least 2 rows, got {n}")
    se = float(np.std(eif.values, ddof=1))
    half = Z_975 * se / np.sqrt(n)
    return se, psi - half, psi + half


def _resolve_mask(mask, n: int) -> np.ndarray:
    if mask is None:
        return np.ones(n, dtype=bool)
    arr = np.asarray(mask, dtype=bool)
    if arr.shape != (n,):
        raise ValidationError(f"mask must have shape ({n},), got {arr.shape}")
    return arr


def _check_arms(a: np.ndarray) -> None:
    if not np.any(a == 1):
        raise EmptyArmError("no treated rows after masking")
    if not np.any(a == 0):
        raise EmptyArmError("no control rows after masking")


def _report(psi: float, eif: np.ndarray, method: str) -> EstimateReport:
    values = EIFValues(values=eif)
    se, lo, hi = eif_variance_ci(values, psi)
    return EstimateReport(
        psi=psi,
        se=se,
        ci_lower=lo,
        ci_upper=hi,
        method=method,
        n=values.n,
        eif_mean=float(np.mean(values.values)),
    )


def aipw_ate(
    data: Dataset,
    mu_hat: np.ndarray,
    alpha1: np.ndarray,
    alpha0: np.ndarray,
    mask=None,
    method: str = "aipw",
) -> EstimateReport:
    """Augmented IPW estimate of the ATE.

    ``mu_hat`` has shape (n, 2) with columns (mu-hat(0, W), mu-hat(1, W)).
    Rows excluded by ``mask`` are dropped entirely (the estimator renormalizes
    over retained rows).
    """
    mu_hat = np.asarray(mu_hat, dtype=float)
    if mu_hat.shape != (data.n, 2):
        raise ValidationError(f"mu_hat must have shape ({data.n}, 2), got {mu_hat.shape}")
    alpha1 = as_float_vector("alpha1", alpha1)
    alpha0 = as_float_vector("alpha0", alpha0)
    check_same_length(treatment=data.treatment, alpha1=alpha1, alpha0=alpha0)
    keep = _resolve_mask(mask, data.n)
    a = data.treatment[keep]
    _check_arms(a)
    y = data.outcome[keep]
    mu0, mu1 = mu_hat[keep, 0], mu_hat[keep, 1]
    sign = np.where(a == 1, 1.0, -1.0)
    own_weight = np.where(a == 1, alpha1[keep], alpha0[keep])
    own_mu = np.where(a == 1, mu1, mu0)
    contrib = mu1 - mu0 + sign * own_weight * (y - own_mu)
    psi = float(np.mean(contrib))
    return _report(psi, contrib - psi, method)


def ipw_ate(
    data: Dataset,
    alpha1: np.ndarray,
    alpha0: np.ndarray,
    mask=None,
    method: str = "ipw",
) -> EstimateReport:
    """Horvitz-Thompson difference of weighted means."""
    alpha1 = as_float_vector("alpha1", alpha1)
    alpha0 = as_float_vector("alpha0", alpha0)
    check_same_length(treatment=data.treatment, alpha1=alpha1, alpha0=alpha0)
    keep = _resolve_mask(mask, data.n)
    a = data.treatment[keep]
    _check_arms(a)
    y = data.outcome[keep]
    summand = np.where(a == 1, alpha1[keep] * y, 0.0) - np.where(a == 0, alpha0[keep] * y, 0.0)
    psi = float(np.mean(summand))
    return _report(psi, summand - psi, method)


def tmle_ate(
    data: Dataset,
    mu_hat: np.ndarray,
    alpha1: np.ndarray,
    alpha0: np.ndarray,
    method: str = "tmle",
) -> EstimateReport:
    """Targeted maximum likelihood estimate of the ATE.

    The outcome is scaled to [0, 1] by its sample range; the initial fit is
    fluctuated along the clever covariate H = sign(A) * alpha(A | W) via a
    one-dimensional logistic model solved by Newton with step halving.  A
    constant outcome short-circuits to psi = 0.
    """
    mu_hat = np.asarray(mu_hat, dtype=float)
    if mu_hat.shape != (data.n, 2):
        raise ValidationError(f"mu_hat must have shape ({data.n}, 2), got {mu_hat.shape}")
    alpha1 = as_float_vector("alpha1", alpha1)
    alpha0 = as_float_vector("alpha0", alpha0)
    check_same_length(treatment=data.treatment, alpha1=alpha1, alpha0=alpha0)
    a = data.treatment
    _check_arms(a)
    y = data.outcome
    y_min, y_max = float(y.min()), float(y.max())
    scale = y_max - y_min
    if scale == 0.0:
        return EstimateReport(
            psi=0.0, se=0.0, ci_lower=0.0, ci_upper=0.0, method=method, n=data.n, eif_mean=0.0
        )
    y_s = (y - y_min) / scale
    mu_s = np.clip((mu_hat - y_min) / scale, MU_CLAMP, 1.0 - MU_CLAMP)
    logit_mu0 = logit(mu_s[:, 0])
    logit_mu1 = logit(mu_s[:, 1])
    h1 = alpha1
    h0 = -alpha0
    h_own = np.where(a == 1, h1, h0)
    logit_own = np.where(a == 1, logit_mu1, logit_mu0)

    def score_at(eps: float) -> float:
        p = expit(logit_own + eps * h_own)
        return float(np.mean(h_own * (y_s - p)))

    eps = 0.0
    score = score_at(eps)
    for _ in range(TMLE_MAX_ITER):
        if abs(score) < TMLE_TOL:
            break
        p = expit(logit_own + eps * h_own)
        curvature = float(np.mean(h_own**2 * p * (1.0 - p)))
        if curvature <= 0.0 or not np.isfinite(curvature):
            raise ConvergenceError("TMLE fluctuation has a degenerate curvature")
        step = score / curvature
        # Backtrack until the score magnitude improves; the 1-d likelihood is
        # concave, so halving always finds an acceptable step.
        for _ in range(60):
            candidate = eps + step
            cand_score = score_at(candidate)
            if np.isfinite(cand_score) and abs(cand_score) <= abs(score):
                break
            step *= 0.5
        else:
            raise ConvergenceError("TMLE fluctuation step search failed")
        eps, score = candidate, cand_score
    if abs(score) >= TMLE_TOL:
        raise ConvergenceError(f"TMLE fluctuation did not converge in {TMLE_MAX_ITER} iterations")

    mu1_t = expit(logit_mu1 + eps * h1)
    mu0_t = expit(logit_mu0 + eps * h0)
    psi_s = float(np.mean(mu1_t - mu0_t))
    mu_own_t = np.where(a == 1, mu1_t, mu0_t)
    eif_s = mu1_t - mu0_t - psi_s + h_own * (y_s - mu_own_t)
    psi = scale * psi_s
    return _report(psi, scale * eif_s, method)
