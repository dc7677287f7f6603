"""Command-line interface: calibrate weights, estimate the ATE, simulate, diagnose.

Exit codes: 0 on success, 1 when a computation fails (divergence, empty arms,
too many failed replicates), 2 on usage or input-validation errors.  Every
subcommand is deterministic given its flags.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from .baselines import dropping_mask, invert_weights, platt_calibrate, trim_adaptive, trim_fixed
from .calibration import calibrate_binary, calibrate_weights
from .data import assign_folds, load_dataset, load_scores, write_weights
from .diagnostics import balance_report, boundary_count, chi2_cal_error_oracle, weight_mse_oracle
from .errors import IcipwError, ValidationError
from .estimators import aipw_ate, ipw_ate, tmle_ate
from .nuisance import fit_outcome_crossfit, fit_propensity_crossfit
from .simulation import METHOD_LABELS, DGPConfig, monte_carlo_run

DGP_PRESETS = {"good-overlap": 1.0, "limited-overlap": 3.0}


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="dataset CSV (covariates, treatment, outcome)")
    parser.add_argument("--treatment-col", default="a", help="treatment column name (default: a)")
    parser.add_argument("--outcome-col", default="y", help="outcome column name (default: y)")


def _load_or_fit_scores(args, dataset):
    if getattr(args, "scores", None):
        return load_scores(args.scores, levels=(1, 0), n_expected=dataset.n)
    folds = assign_folds(dataset.n, args.folds, args.seed)
    return fit_propensity_crossfit(
        dataset,
        folds,
        basis_degree=args.propensity_degree,
        first_covariate_only=args.propensity_first_covariate_only,
    )


def _write_balance(report, path: str, extra: dict[str, str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["level_value", "count", "stabilized_mean", "deviation"])
        for row in report.rows:
            writer.writerow(
                [_fmt(row.level_value), str(row.count), _fmt(row.stabilized_mean), _fmt(row.deviation)]
            )
        summary = [f"max_abs_deviation={_fmt(report.max_abs_deviation)}"]
        summary.extend(f"{key}={val}" for key, val in extra.items())
        fh.write("summary " + " ".join(summary) + "\n")


def cmd_calibrate(args) -> int:
    dataset = load_dataset(args.data, args.treatment_col, args.outcome_col)
    scores = _load_or_fit_scores(args, dataset)
    min_seg = args.min_segment if args.min_segment is not None else 0.0
    if scores.complementary:
        cal1, cal0 = calibrate_binary(dataset, scores, min_seg)
        weights = {"alpha1_star": cal1.alpha, "alpha0_star": cal0.alpha}
        report = balance_report(dataset, cal1.alpha, 1)
    else:
        columns = {}
        primary = None
        for level in sorted(scores.levels, reverse=True):
            fitted = calibrate_weights(dataset, scores, level, min_seg)
            columns[f"alpha{level}_star"] = fitted.alpha
            primary = fitted if primary is None or level == 1 else primary
        weights = columns
        report = balance_report(dataset, primary.alpha, primary.level)
    write_weights(weights, args.out)
    balance_path = args.balance_out or args.out + ".balance.csv"
    _write_balance(report, balance_path, {})
    return 0


def _build_weights(args, dataset, scores):
    """Resolve the --weights spec into (alpha1, alpha0, mask, label)."""
    spec = args.weights
    if spec == "ic":
        if scores.complementary:
            cal1, cal0 = calibrate_binary(dataset, scores)
            return cal1.alpha, cal0.alpha, None, "ic"
        cal1 = calibrate_weights(dataset, scores, 1)
        cal0 = calibrate_weights(dataset, scores, 0)
        return cal1.alpha, cal0.alpha, None, "ic"
    if spec == "invert":
        return invert_weights(scores, 1), invert_weights(scores, 0), None, "invert"
    if spec == "trim-adaptive":
        trim, w1, w0 = trim_adaptive(dataset, scores, args.grid_step)
        return w1, w0, None, f"trim-adaptive(c={trim.c:g})"
    if spec == "platt":
        _, w1 = platt_calibrate(dataset, scores, 1)
        _, w0 = platt_calibrate(dataset, scores, 0)
        return w1, w0, None, "platt"
    if spec.startswith("trim:"):
        c = _parse_threshold(spec)
        return trim_fixed(scores, 1, c), trim_fixed(scores, 0, c), None, spec
    if spec.startswith("drop:"):
        c = _parse_threshold(spec)
        mask = dropping_mask(scores, c)
        return invert_weights(scores, 1), invert_weights(scores, 0), mask, spec
    raise ValidationError(
        f"unknown weights spec {spec!r} "
        "(choose from ic, invert, trim:<c>, trim-adaptive, platt, drop:<c>)"
    )


def _parse_threshold(spec: str) -> float:
    try:
        return float(spec.split(":", 1)[1])
    except ValueError:
        raise ValidationError(f"could not parse threshold in weights spec {spec!r}") from None


def cmd_estimate(args) -> int:
    dataset = load_dataset(args.data, args.treatment_col, args.outcome_col)
    scores = _load_or_fit_scores(args, dataset)
    alpha1, alpha0, mask, weight_label = _build_weights(args, dataset, scores)
    label = f"{args.method}+{weight_label}"
    if args.method == "ipw":
        report = ipw_ate(dataset, alpha1, alpha0, mask=mask, method=label)
    else:
        folds = scores.folds
        mu_hat = fit_outcome_crossfit(dataset, folds, basis_degree=args.basis_degree)
        if args.method == "aipw":
            report = aipw_ate(dataset, mu_hat, alpha1, alpha0, mask=mask, method=label)
        else:
            report = tmle_ate(dataset, mu_hat, alpha1, alpha0, method=label)
    text = "\n".join(report.lines()) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    cfg = DGPConfig(
        n=args.n,
        d=args.dim,
        overlap_gamma=DGP_PRESETS[args.dgp],
        noise_sd=args.noise_sd,
        seed=args.seed,
        dgp_id=args.dgp,
    )
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    result = monte_carlo_run(
        cfg,
        args.reps,
        methods,
        folds=args.folds,
        outcome_degree=args.basis_degree,
        propensity_degree=args.propensity_degree,
        propensity_first_covariate_only=args.propensity_first_covariate_only,
    )
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "bias", "se", "rmse", "coverage", "reps_ok", "reps_failed"])
        for row in result.rows:
            writer.writerow(
                [
                    row.method,
                    _fmt(row.bias),
                    _fmt(row.se),
                    _fmt(row.rmse),
                    _fmt(row.coverage),
                    str(row.reps_ok),
                    str(row.reps_failed),
                ]
            )
    return 0


def _read_column(path: str, name: str, n_expected: int) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"empty input: {path}")
    header = [c.strip() for c in rows[0]]
    if name not in header:
        raise ValidationError(f"column {name!r} not found in {path} (header: {header})")
    idx = header.index(name)
    body = rows[1:]
    if len(body) != n_expected:
        raise ValidationError(f"{path} has {len(body)} rows, expected {n_expected}")
    try:
        return np.array([float(r[idx]) for r in body])
    except ValueError as exc:
        raise ValidationError(f"could not parse column {name!r} in {path}: {exc}") from None


def cmd_diagnose(args) -> int:
    dataset = load_dataset(args.data, args.treatment_col, args.outcome_col)
    level = args.level
    scores = None
    if args.scores:
        levels = (1, 0) if level in (0, 1) else (level,)
        scores = load_scores(args.scores, levels=levels, n_expected=dataset.n)
    if args.weights_file:
        alpha = _read_column(args.weights_file, f"alpha{level}_star", dataset.n)
    elif scores is not None:
        alpha = calibrate_weights(dataset, scores, level).alpha
    else:
        raise ValidationError("diagnose needs --scores or --weights-file")
    report = balance_report(dataset, alpha, level)
    extra: dict[str, str] = {}
    if scores is not None:
        extra["boundary_count"] = str(boundary_count(scores, dataset.treatment, level))
    if args.pi0_file:
        pi_true = _read_column(args.pi0_file, f"pi{level}", dataset.n)
        extra["cal_error"] = _fmt(chi2_cal_error_oracle(alpha, pi_true))
        extra["weight_rmse"] = _fmt(weight_mse_oracle(alpha, pi_true, dataset.treatment, level))
    if args.out:
        _write_balance(report, args.out, extra)
    else:
        for row in report.rows:
            sys.stdout.write(
                f"{_fmt(row.level_value)},{row.count},{_fmt(row.stabilized_mean)},{_fmt(row.deviation)}\n"
            )
        summary = [f"max_abs_deviation={_fmt(report.max_abs_deviation)}"]
        summary.extend(f"{k}={v}" for k, v in extra.items())
        sys.stdout.write("summary " + " ".join(summary) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icipw",
        description=(
            "Calibrate cross-fitted propensity scores into stabilized inverse weights "
            "and estimate average treatment effects."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--folds", type=int, default=10, help="cross-fitting folds (default: 10)")
    common.add_argument("--seed", type=int, default=0, help="seed for fold assignment (default: 0)")
    common.add_argument(
        "--propensity-degree", type=int, default=1, choices=(1, 2),
        help="basis degree of the in-repo propensity model (default: 1)",
    )
    common.add_argument(
        "--propensity-first-covariate-only", action="store_true",
        help="restrict the propensity model to an intercept plus the first covariate",
    )

    p_cal = sub.add_parser(
        "calibrate", parents=[common],
        help="write calibrated inverse weights (alpha1_star,alpha0_star) and a balance report",
    )
    _add_data_flags(p_cal)
    p_cal.add_argument("--scores", help="scores CSV (fold,pi1,pi0); omit to fit in-repo scores")
    p_cal.add_argument(
        "--fit-scores", action="store_true",
        help="fit cross-fitted logistic scores instead of reading --scores",
    )
    p_cal.add_argument(
        "--min-segment", type=float, nargs="?", const=10.0, default=None, metavar="W",
        help="minimum observations per constant segment (flag alone: 10; omit: disabled)",
    )
    p_cal.add_argument("--out", required=True, help="output weights CSV path")
    p_cal.add_argument("--balance-out", help="balance report CSV path (default: <out>.balance.csv)")
    p_cal.set_defaults(func=cmd_calibrate)

    p_est = sub.add_parser("estimate", parents=[common], help="estimate the ATE for one method/weights pair")
    _add_data_flags(p_est)
    p_est.add_argument("--method", required=True, choices=("aipw", "ipw", "tmle"), help="estimator")
    p_est.add_argument(
        "--weights", required=True,
        help="weight construction: ic | invert | trim:<c> | trim-adaptive | platt | drop:<c>",
    )
    p_est.add_argument("--scores", help="scores CSV; omit to fit in-repo scores")
    p_est.add_argument(
        "--basis-degree", type=int, default=2, choices=(1, 2),
        help="basis degree of the outcome regression (default: 2)",
    )
    p_est.add_argument("--grid-step", type=float, default=0.001, help="adaptive-trim grid step (default: 0.001)")
    p_est.add_argument("--out", help="write the name=value report here instead of stdout")
    p_est.set_defaults(func=cmd_estimate)

    p_sim = sub.add_parser("simulate", parents=[common], help="Monte Carlo study over synthetic data")
    p_sim.add_argument("--dgp", required=True, choices=sorted(DGP_PRESETS), help="overlap regime")
    p_sim.add_argument("--n", type=int, required=True, help="sample size per replicate")
    p_sim.add_argument("--reps", type=int, required=True, help="number of replicates (at least 2)")
    p_sim.add_argument("--noise-sd", type=float, default=1.0, help="outcome noise sd (default: 1.0)")
    p_sim.add_argument("--dim", type=int, default=4, help="covariate dimension (default: 4)")
    p_sim.add_argument(
        "--methods", default=",".join(METHOD_LABELS),
        help=f"comma-separated method labels (default: all of {','.join(METHOD_LABELS)})",
    )
    p_sim.add_argument(
        "--basis-degree", type=int, default=2, choices=(1, 2),
        help="basis degree of the outcome regression (default: 2)",
    )
    p_sim.add_argument("--out", required=True, help="results CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    p_diag = sub.add_parser("diagnose", parents=[common], help="balance, boundary, and oracle diagnostics")
    _add_data_flags(p_diag)
    p_diag.add_argument("--scores", help="scores CSV (enables the boundary count)")
    p_diag.add_argument("--weights-file", help="weights CSV with alpha<level>_star columns")
    p_diag.add_argument("--level", type=int, default=1, help="treatment level to diagnose (default: 1)")
    p_diag.add_argument("--pi0-file", help="CSV of true propensities pi<level> (enables oracle metrics)")
    p_diag.add_argument("--out", help="write the diagnostics CSV here instead of stdout")
    p_diag.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"icipw: error: {exc}", file=sys.stderr)
        return 2
    except IcipwError as exc:
        print(f"icipw: computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
