"""Scratch: probe acceptance-criteria configurations (not part of the package)."""
import time

import numpy as np

from icipw import (
    DGPConfig,
    assign_folds,
    calibrate_binary,
    chi2_cal_error_oracle,
    fit_propensity_crossfit,
    generate_replicate,
    invert_weights,
    monte_carlo_run,
    trim_fixed,
    weight_mse_oracle,
)


def ic_and_baseline_mses(n, reps, gamma, w1_only, seed=101):
    cfg = DGPConfig(n=n, overlap_gamma=gamma, noise_sd=1.0, seed=seed)
    out = {"ic": [], "naive": [], "trim01": [], "trim05": []}
    cals = []
    for m in range(reps):
        rep = generate_replicate(cfg, m)
        folds = assign_folds(n, 10, 7_000 + m)
        scores = fit_propensity_crossfit(rep.dataset, folds, first_covariate_only=w1_only)
        cal1, _ = calibrate_binary(rep.dataset, scores)
        out["ic"].append(weight_mse_oracle(cal1.alpha, rep.pi0))
        out["naive"].append(weight_mse_oracle(invert_weights(scores, 1), rep.pi0))
        out["trim01"].append(weight_mse_oracle(trim_fixed(scores, 1, 0.01), rep.pi0))
        out["trim05"].append(weight_mse_oracle(trim_fixed(scores, 1, 0.05), rep.pi0))
        cals.append(chi2_cal_error_oracle(cal1.alpha, rep.pi0))
    return {k: float(np.mean(v)) for k, v in out.items()}, float(np.mean(cals))


def main():
    t0 = time.time()
    print("=== criterion 5: CAL decay (limited overlap, gamma=3) ===")
    for w1_only in (False, True):
        _, cal500 = ic_and_baseline_mses(500, 50, 3.0, w1_only)
        _, cal4000 = ic_and_baseline_mses(4000, 50, 3.0, w1_only)
        print(f"w1_only={w1_only}: CAL(500)={cal500:.5g} CAL(4000)={cal4000:.5g} "
              f"ratio={cal4000 / cal500:.4f} (need <= 1.0)  [{time.time()-t0:.0f}s]")

    print("=== criterion 6: weight MSE, n=2000, 100 reps, gamma=3 ===")
    for w1_only in (False, True):
        mses, _ = ic_and_baseline_mses(2000, 100, 3.0, w1_only)
        floor = min(mses["naive"], mses["trim01"], mses["trim05"])
        print(f"w1_only={w1_only}: {mses}  ic/min={mses['ic'] / floor:.4f} (need <= 1.05) "
              f"[{time.time()-t0:.0f}s]")

    print("=== criterion 7: good overlap coverage gamma=1 n=1000 M=500 ===")
    cfg = DGPConfig(n=1000, overlap_gamma=1.0, noise_sd=1.0, seed=202)
    res = monte_carlo_run(cfg, 500, ["ic_aipw", "inversion"], folds=10)
    for row in res.rows:
        print(f"  {row.method}: bias={row.bias:.4f} rmse={row.rmse:.4f} cov={row.coverage:.3f}")
    print(f"[{time.time()-t0:.0f}s]")

    print("=== criterion 8: limited overlap ordering gamma=3 n=2000 M=200 ===")
    for w1_only, odeg in ((False, 2), (True, 2), (True, 1), (False, 1)):
        cfg = DGPConfig(n=2000, overlap_gamma=3.0, noise_sd=1.0, seed=303)
        res = monte_carlo_run(
            cfg, 200, ["ic_aipw", "inversion", "ic_tmle"], folds=10,
            outcome_degree=odeg, propensity_first_covariate_only=w1_only,
        )
        by = res.by_method()
        ic, nv = by["ic_aipw"], by["inversion"]
        print(f"w1_only={w1_only} odeg={odeg}: IC cov={ic.coverage:.3f} bias={ic.bias:.4f} | "
              f"naive cov={nv.coverage:.3f} bias={nv.bias:.4f} | "
              f"gap={ic.coverage - nv.coverage:.3f} |bias| ok={abs(ic.bias) < abs(nv.bias)} "
              f"[{time.time()-t0:.0f}s]")


if __name__ == "__main__":
    main()
