"""Synthetic data generation and the Monte Carlo runner."""

import numpy as np
import pytest

import icipw.simulation as sim
from icipw import (
    ComputationError,
    DGPConfig,
    Replicate,
    ValidationError,
    generate_replicate,
    monte_carlo_run,
    true_ate,
)


class TestGenerateReplicate:
    def test_deterministic(self):
        cfg = DGPConfig(n=200, seed=5)
        a = generate_replicate(cfg, 3)
        b = generate_replicate(cfg, 3)
        np.testing.assert_array_equal(a.dataset.covariates, b.dataset.covariates)
        np.testing.assert_array_equal(a.dataset.outcome, b.dataset.outcome)
        np.testing.assert_array_equal(a.pi0, b.pi0)

    def test_replicates_differ(self):
        cfg = DGPConfig(n=200, seed=5)
        a = generate_replicate(cfg, 0)
        b = generate_replicate(cfg, 1)
        assert not np.array_equal(a.dataset.outcome, b.dataset.outcome)

    def test_overlap_knob_reaches_boundary(self):
        cfg = DGPConfig(n=4000, overlap_gamma=3.0, seed=6)
        hits = sum(generate_replicate(cfg, m).pi0.min() < 0.02 for m in range(10))
        assert hits == 10

    def test_vanishing_gamma_gives_coin_flip(self):
        cfg = DGPConfig(n=100, overlap_gamma=1e-12, seed=7)
        rep = generate_replicate(cfg, 0)
        np.testing.assert_allclose(rep.pi0, 0.5, atol=1e-12)

    def test_oracle_fields_consistent(self):
        cfg = DGPConfig(n=500, seed=8, noise_sd=0.0)
        rep = generate_replicate(cfg, 0)
        w = rep.dataset.covariates
        np.testing.assert_allclose(rep.tau0, 1.0 + w[:, 0])
        mu = w[:, 0] + w[:, 1] ** 2 + rep.dataset.treatment * rep.tau0
        np.testing.assert_allclose(rep.dataset.outcome, mu)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            DGPConfig(n=10)
        with pytest.raises(ValidationError):
            DGPConfig(n=100, overlap_gamma=0.0)
        with pytest.raises(ValidationError):
            DGPConfig(n=100, d=2)


class TestTrueAte:
    def test_sample_mean_of_effects(self):
        cfg = DGPConfig(n=200, seed=9)
        rep = generate_replicate(cfg, 0)
        assert true_ate(cfg, rep) == pytest.approx(float(np.mean(1.0 + rep.dataset.covariates[:, 0])))

    def test_forced_covariate_value(self):
        cfg = DGPConfig(n=100, seed=10)
        base = generate_replicate(cfg, 0)
        forced = Replicate(
            dataset=base.dataset, pi0=base.pi0, tau0=np.full(100, 1.5), rep_index=0
        )
        assert true_ate(cfg, forced) == pytest.approx(1.5)

    def test_population_value_via_clt(self):
        cfg = DGPConfig(n=500, seed=11)
        taus = [true_ate(cfg, generate_replicate(cfg, m)) for m in range(50)]
        tolerance = 3.0 * np.std([1.0, -1.0]) / np.sqrt(500 * 50) * 3
        assert abs(np.mean(taus) - 1.0) <= max(tolerance, 3 / np.sqrt(500 * 50))


class TestMonteCarloRun:
    def test_smoke_and_rmse_identity(self):
        cfg = DGPConfig(n=120, overlap_gamma=1.0, seed=12)
        result = monte_carlo_run(cfg, 2, ["ic_aipw", "ipw_naive"], folds=4)
        assert result.reps == 2
        for row in result.rows:
            assert row.rmse**2 - (row.bias**2 + row.se**2) >= -1e-12
            assert abs(row.rmse**2 - row.bias**2 - row.se**2) <= 1e-9
            assert 0.0 <= row.coverage <= 1.0
            assert row.reps_ok == 2

    def test_deterministic(self):
        cfg = DGPConfig(n=100, overlap_gamma=1.0, seed=13)
        a = monte_carlo_run(cfg, 3, ["ic_aipw"], folds=5)
        b = monte_carlo_run(cfg, 3, ["ic_aipw"], folds=5)
        assert a == b

    def test_all_methods_run(self):
        cfg = DGPConfig(n=150, overlap_gamma=1.0, seed=14)
        result = monte_carlo_run(cfg, 2, list(sim.METHOD_LABELS), folds=3)
        assert {row.method for row in result.rows} == set(sim.METHOD_LABELS)

    def test_reps_floor(self):
        cfg = DGPConfig(n=100, seed=15)
        with pytest.raises(ValidationError):
            monte_carlo_run(cfg, 1, ["ic_aipw"])

    def test_unknown_method(self):
        cfg = DGPConfig(n=100, seed=16)
        with pytest.raises(ValidationError, match="unknown"):
            monte_carlo_run(cfg, 2, ["ic_aipw", "mystery"])

    def test_failure_budget_aborts(self, monkeypatch):
        cfg = DGPConfig(n=100, overlap_gamma=1.0, seed=17)
        original = sim._estimate_one

        def flaky(method, *args, **kwargs):
            if method == "ipw_naive":
                raise ComputationError("synthetic failure")
            return original(method, *args, **kwargs)

        monkeypatch.setattr(sim, "_estimate_one", flaky)
        with pytest.raises(ComputationError, match="ipw_naive"):
            monte_carlo_run(cfg, 3, ["ic_aipw", "ipw_naive"], folds=5)
