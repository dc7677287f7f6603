"""Isotonic-calibrated inverse propensity weighting and doubly robust ATE estimation.

The central object is the weight calibrator: a monotone step-function fit of
the treatment indicator on pooled out-of-fold propensity scores, inverted and
adaptively truncated into stabilized inverse weights.  Around it sit baseline
weight constructions (inversion, trimming, Platt scaling, dropping), cross-
fitted nuisance learners, IPW/AIPW/TMLE estimators with influence-function
intervals, diagnostics, and a Monte Carlo harness.
"""

from .baselines import (
    PlattModel,
    TrimSpec,
    dropping_mask,
    invert_weights,
    platt_calibrate,
    trim_adaptive,
    trim_fixed,
)
from .calibration import (
    CalibratedWeights,
    Calibrator,
    IsotonicWeightCalibrator,
    apply_calibrator,
    calibrate_binary,
    calibrate_weights,
)
from .data import (
    Dataset,
    FoldAssignment,
    ScoreTable,
    assign_folds,
    load_dataset,
    load_scores,
    write_dataset,
    write_scores,
    write_weights,
)
from .diagnostics import (
    BalanceReport,
    BalanceRow,
    balance_report,
    boundary_count,
    chi2_cal_error_oracle,
    weight_mse_oracle,
)
from .errors import (
    ComputationError,
    ConvergenceError,
    EmptyArmError,
    IcipwError,
    ValidationError,
)
from .estimators import EIFValues, EstimateReport, aipw_ate, eif_variance_ci, ipw_ate, tmle_ate
from .isotonic import (
    BlockFit,
    StepFunction,
    WeightedPoints,
    antitonic_fit,
    brute_force_isotonic,
    pava_blocks,
    pava_fit,
    step_eval,
)
from .nuisance import (
    LinearModel,
    basis_expand,
    expit,
    fit_logistic,
    fit_outcome_crossfit,
    fit_propensity_crossfit,
    logit,
)
from .simulation import (
    DGPConfig,
    MCResult,
    METHOD_LABELS,
    MethodPerformance,
    Replicate,
    generate_replicate,
    monte_carlo_run,
    true_ate,
)

__version__ = "0.1.0"
