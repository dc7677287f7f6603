"""Scratch: scan configurations for the limited-overlap ordering criterion."""
import time

import numpy as np

from icipw import DGPConfig, monte_carlo_run
from icipw.errors import IcipwError

CONFIGS = [
    # (tag, d, noise, J, pdeg, odeg, w1only)
    ("A base", 4, 1.0, 10, 1, 2, False),
    ("B w1T-o2", 4, 1.0, 10, 1, 2, True),
    ("C w1T-o1", 4, 1.0, 10, 1, 1, True),
    ("D p2-d12", 12, 1.0, 10, 2, 2, False),
    ("E p2-d12-o1", 12, 1.0, 10, 2, 1, False),
    ("F p2-d20", 20, 1.0, 10, 2, 2, False),
    ("G p2-d12-J2", 12, 1.0, 2, 2, 2, False),
    ("H p2-d8", 8, 1.0, 10, 2, 2, False),
    ("I w1T-o1-lownoise", 4, 0.25, 10, 1, 1, True),
    ("J p1-d20", 20, 1.0, 10, 1, 2, False),
]


def main():
    t0 = time.time()
    for tag, d, noise, J, pdeg, odeg, w1 in CONFIGS:
        cfg = DGPConfig(n=2000, d=d, overlap_gamma=3.0, noise_sd=noise, seed=404)
        try:
            res = monte_carlo_run(
                cfg, 100, ["ic_aipw", "inversion"], folds=J,
                outcome_degree=odeg, propensity_degree=pdeg,
                propensity_first_covariate_only=w1,
            )
        except IcipwError as exc:
            print(f"{tag}: ABORTED ({exc})")
            continue
        by = res.by_method()
        ic, nv = by["ic_aipw"], by["inversion"]
        print(
            f"{tag}: IC cov={ic.coverage:.2f} bias={ic.bias:+.4f} rmse={ic.rmse:.3f} f{ic.reps_failed} | "
            f"NV cov={nv.coverage:.2f} bias={nv.bias:+.4f} rmse={nv.rmse:.3f} f{nv.reps_failed} | "
            f"gap={ic.coverage - nv.coverage:+.2f} bias_ok={abs(ic.bias) < abs(nv.bias)} "
            f"[{time.time() - t0:.0f}s]"
        )


if __name__ == "__main__":
    main()
