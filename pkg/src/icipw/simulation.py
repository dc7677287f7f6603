"""Synthetic data generation with a controllable overlap knob, and a Monte Carlo runner.

The generating process draws independent uniform covariates, a logistic
treatment assignment whose index is scaled by ``overlap_gamma`` (1 keeps
propensities comfortably interior, 3 pushes them toward the boundaries), and
an additive-noise outcome with per-row treatment effect 1 + W1.  Each
replicate carries the true propensities and effects so oracle diagnostics and
coverage can be computed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import dropping_mask, invert_weights, platt_calibrate, trim_adaptive, trim_fixed
from .calibration import calibrate_binary
from .data import Dataset, assign_folds
from .errors import ComputationError, IcipwError, ValidationError
from .estimators import EstimateReport, aipw_ate, ipw_ate, tmle_ate
from .nuisance import expit, fit_outcome_crossfit, fit_propensity_crossfit
from .validation import freeze

__all__ = [
    "DGPConfig",
    "Replicate",
    "MethodPerformance",
    "MCResult",
    "METHOD_LABELS",
    "generate_replicate",
    "true_ate",
    "monte_carlo_run",
]

METHOD_LABELS = (
    "inversion",
    "trim_fixed",
    "trim_adaptive",
    "platt",
    "ic_aipw",
    "tmle",
    "ic_tmle",
    "dropping",
    "ipw_ic",
    "ipw_naive",
)

MAX_FAILURE_FRACTION = 0.05


@dataclass(frozen=True)
class DGPConfig:
    """Shape of one synthetic data-generating process."""

    n: int
    d: int = 4
    overlap_gamma: float = 1.0
    noise_sd: float = 1.0
    seed: int = 0
    dgp_id: str = "synthetic"

    def __post_init__(self):
        if self.n < 50:
            raise ValidationError(f"sample size must be at least 50, got {self.n}")
        if self.d < 3:
            raise ValidationError("the generating process uses the first three covariates")
        if self.overlap_gamma <= 0.0:
            raise ValidationError("overlap_gamma must be positive")
        if self.noise_sd < 0.0:
            raise ValidationError("noise_sd must be nonnegative")


@dataclass(frozen=True)
class Replicate:
    """One simulated dataset with its oracle fields."""

    dataset: Dataset
    pi0: np.ndarray
    tau0: np.ndarray
    rep_index: int

    def __post_init__(self):
        object.__setattr__(self, "pi0", freeze(np.asarray(self.pi0, dtype=float)))
        object.__setattr__(self, "tau0", freeze(np.asarray(self.tau0, dtype=float)))


@dataclass(frozen=True)
class MethodPerformance:
    """Monte Carlo summary for one method."""

    method: str
    bias: float
    se: float
    rmse: float
    coverage: float
    reps_ok: int
    reps_failed: int


@dataclass(frozen=True)
class MCResult:
    """Per-method Monte Carlo table."""

    rows: tuple[MethodPerformance, ...]
    reps: int

    def by_method(self) -> dict[str, MethodPerformance]:
        return {row.method: row for row in self.rows}


def generate_replicate(cfg: DGPConfig, rep_index: int) -> Replicate:
    """Draw one replicate; deterministic in (cfg.seed, rep_index)."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, rep_index]))
    w = rng.uniform(-1.0, 1.0, size=(cfg.n, cfg.d))
    index = cfg.overlap_gamma * (w[:, 0] + 0.5 * w[:, 1] - 0.5 * w[:, 2])
    pi0 = expit(index)
    a = (rng.random(cfg.n) < pi0).astype(np.int64)
    tau0 = 1.0 + w[:, 0]
    mu = w[:, 0] + w[:, 1] ** 2 + a * tau0
    y = mu + cfg.noise_sd * rng.standard_normal(cfg.n)
    dataset = Dataset(covariates=w, treatment=a, outcome=y)
    return Replicate(dataset=dataset, pi0=pi0, tau0=tau0, rep_index=rep_index)


def true_ate(cfg: DGPConfig, replicate: Replicate) -> float:
    """Replicate-level true ATE: the sample mean of the per-row true effects."""
    return float(np.mean(replicate.tau0))


def _fold_seed(cfg: DGPConfig, rep_index: int) -> int:
    return int(np.random.SeedSequence([cfg.seed, rep_index, 1]).generate_state(1, np.uint64)[0])


def _estimate_one(
    method: str,
    dataset: Dataset,
    scores,
    mu_hat,
    trim_c: float,
    drop_c: float,
    grid_step: float,
) -> EstimateReport:
    if method == "inversion":
        return aipw_ate(dataset, mu_hat, invert_weights(scores, 1), invert_weights(scores, 0), method="aipw+invert")
    if method == "trim_fixed":
        return aipw_ate(
            dataset, mu_hat, trim_fixed(scores, 1, trim_c), trim_fixed(scores, 0, trim_c), method=f"aipw+trim:{trim_c}"
        )
    if method == "trim_adaptive":
        _, w1, w0 = trim_adaptive(dataset, scores, grid_step)
        return aipw_ate(dataset, mu_hat, w1, w0, method="aipw+trim-adaptive")
    if method == "platt":
        _, w1 = platt_calibrate(dataset, scores, 1)
        _, w0 = platt_calibrate(dataset, scores, 0)
        return aipw_ate(dataset, mu_hat, w1, w0, method="aipw+platt")
    if method == "dropping":
        mask = dropping_mask(scores, drop_c)
        return aipw_ate(
            dataset, mu_hat, invert_weights(scores, 1), invert_weights(scores, 0), mask=mask, method=f"aipw+drop:{drop_c}"
        )
    if method == "ic_aipw":
        cal1, cal0 = calibrate_binary(dataset, scores)
        return aipw_ate(dataset, mu_hat, cal1.alpha, cal0.alpha, method="aipw+ic")
    if method == "tmle":
        return tmle_ate(dataset, mu_hat, invert_weights(scores, 1), invert_weights(scores, 0), method="tmle+invert")
    if method == "ic_tmle":
        cal1, cal0 = calibrate_binary(dataset, scores)
        return tmle_ate(dataset, mu_hat, cal1.alpha, cal0.alpha, method="tmle+ic")
    if method == "ipw_ic":
        cal1, cal0 = calibrate_binary(dataset, scores)
        return ipw_ate(dataset, cal1.alpha, cal0.alpha, method="ipw+ic")
    if method == "ipw_naive":
        return ipw_ate(dataset, invert_weights(scores, 1), invert_weights(scores, 0), method="ipw+invert")
    raise ValidationError(f"unknown method {method!r} (choose from {METHOD_LABELS})")


def monte_carlo_run(
    cfg: DGPConfig,
    reps: int,
    methods,
    folds: int = 10,
    *,
    outcome_degree: int = 2,
    propensity_degree: int = 1,
    propensity_first_covariate_only: bool = False,
    trim_c: float = 0.01,
    drop_c: float = 0.01,
    grid_step: float = 0.001,
) -> MCResult:
    """Monte Carlo evaluation of ATE methods under one generating process.

    For each replicate, fits cross-fitted nuisances, builds every requested
    method's weights, and records estimate and interval against the
    replicate-level true ATE.  A replicate that raises for a method is counted
    as failed for that method; the run aborts if any method fails on more than
    5% of replicates.

    Returns:
        MCResult with Monte Carlo bias, standard error, RMSE, and 95% interval
        coverage per method, plus replicate accounting.
    """
    methods = list(methods)
    if reps < 2:
        raise ValidationError(f"at least 2 replicates are required, got {reps}")
    unknown = [m for m in methods if m not in METHOD_LABELS]
    if unknown:
        raise ValidationError(f"unknown methods {unknown} (choose from {METHOD_LABELS})")
    estimates: dict[str, list[tuple[float, float, bool]]] = {m: [] for m in methods}
    failures = {m: 0 for m in methods}
    for rep_index in range(reps):
        replicate = generate_replicate(cfg, rep_index)
        dataset = replicate.dataset
        tau_m = true_ate(cfg, replicate)
        try:
            fold_assignment = assign_folds(dataset.n, folds, _fold_seed(cfg, rep_index))
            scores = fit_propensity_crossfit(
                dataset,
                fold_assignment,
                basis_degree=propensity_degree,
                first_covariate_only=propensity_first_covariate_only,
            )
            mu_hat = fit_outcome_crossfit(dataset, fold_assignment, basis_degree=outcome_degree)
        except IcipwError:
            for m in methods:
                failures[m] += 1
            continue
        for m in methods:
            try:
                report = _estimate_one(m, dataset, scores, mu_hat, trim_c, drop_c, grid_step)
            except IcipwError:
                failures[m] += 1
                continue
            covered = report.ci_lower <= tau_m <= report.ci_upper
            estimates[m].append((report.psi, tau_m, covered))
    over_budget = {m: f for m, f in failures.items() if f > MAX_FAILURE_FRACTION * reps}
    if over_budget:
        raise ComputationError(
            f"more than {MAX_FAILURE_FRACTION:.0%} of replicates failed for: {over_budget}"
        )
    rows = []
    for m in methods:
        records = estimates[m]
        errors = np.array([psi - tau for psi, tau, _ in records])
        bias = float(np.mean(errors))
        rmse = float(np.sqrt(np.mean(errors**2)))
        se = float(np.sqrt(max(rmse**2 - bias**2, 0.0)))
        coverage = float(np.mean([covered for _, _, covered in records]))
        rows.append(
            MethodPerformance(
                method=m,
                bias=bias,
                se=se,
                rmse=rmse,
                coverage=coverage,
                reps_ok=len(records),
                reps_failed=failures[m],
            )
        )
    return MCResult(rows=tuple(rows), reps=reps)
