"""Cross-fitted nuisance learners: basis expansion, logistic and outcome fits."""

import numpy as np
import pytest

from icipw import (
    Dataset,
    EmptyArmError,
    FoldAssignment,
    ValidationError,
    assign_folds,
    basis_expand,
    fit_outcome_crossfit,
    fit_propensity_crossfit,
)
from icipw.nuisance import expit, fit_logistic


def logistic_dataset(rng, n, d=3, beta=(1.0, 0.5, -0.5), noise_sd=1.0):
    w = rng.uniform(-1.0, 1.0, size=(n, d))
    pi = expit(w[:, : len(beta)] @ np.asarray(beta))
    a = (rng.random(n) < pi).astype(int)
    y = w[:, 0] + a * 1.5 + noise_sd * rng.standard_normal(n)
    return Dataset(covariates=w, treatment=a, outcome=y), pi


class TestBasisExpand:
    def test_degree_two_ordering(self):
        out = basis_expand(np.array([[2.0, 3.0]]), 2)
        np.testing.assert_array_equal(out, [[2.0, 3.0, 4.0, 9.0, 6.0]])

    def test_degree_one_identity(self):
        w = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(basis_expand(w, 1), w)

    def test_degree_two_dimension_count(self):
        w = np.zeros((4, 10))
        assert basis_expand(w, 2).shape == (4, 10 + 10 + 45)

    def test_unsupported_degree(self):
        with pytest.raises(ValidationError):
            basis_expand(np.zeros((1, 2)), 3)


class TestFitLogistic:
    def test_score_equation_holds(self):
        rng = np.random.default_rng(1)
        x = np.column_stack([np.ones(400), rng.normal(size=400)])
        y = (rng.random(400) < expit(0.5 * x[:, 1])).astype(float)
        beta = fit_logistic(x, y, ridge=1e-8)
        residual = y - expit(x @ beta)
        assert abs(residual.mean()) <= 1e-8

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        x = np.column_stack([np.ones(100), rng.normal(size=100)])
        y = (rng.random(100) < 0.5).astype(float)
        np.testing.assert_array_equal(fit_logistic(x, y), fit_logistic(x, y))


class TestPropensityCrossfit:
    def test_out_of_fold_mse_small_when_well_specified(self):
        rng = np.random.default_rng(3)
        data, pi = logistic_dataset(rng, 5000)
        folds = assign_folds(data.n, 10, seed=4)
        scores = fit_propensity_crossfit(data, folds, basis_degree=1)
        mse = np.mean((scores.scores[1] - pi) ** 2)
        assert mse < 0.01
        assert scores.complementary

    def test_constant_covariates_return_fold_share(self):
        rng = np.random.default_rng(5)
        a = rng.integers(0, 2, size=60)
        data = Dataset(covariates=np.zeros((60, 2)), treatment=a, outcome=np.zeros(60))
        folds = assign_folds(60, 3, seed=6)
        scores = fit_propensity_crossfit(data, folds)
        for j in range(1, 4):
            held = folds.fold_of == j
            expected = a[~held].mean()
            np.testing.assert_allclose(scores.scores[1][held], expected, atol=1e-6)

    def test_leave_one_out_runs(self):
        rng = np.random.default_rng(7)
        data, _ = logistic_dataset(rng, 40)
        folds = assign_folds(40, 40, seed=8)
        scores = fit_propensity_crossfit(data, folds)
        assert scores.n == 40

    def test_out_of_fold_discipline(self):
        rng = np.random.default_rng(9)
        data, _ = logistic_dataset(rng, 200)
        folds = assign_folds(200, 5, seed=10)
        base = fit_propensity_crossfit(data, folds)
        # Flipping fold-1 labels must not move fold-1's own scores: they come
        # from a model that never saw fold 1.
        flipped = data.treatment.copy()
        hold = folds.fold_of == 1
        flipped[hold] = 1 - flipped[hold]
        poked = Dataset(covariates=data.covariates, treatment=flipped, outcome=data.outcome)
        scores = fit_propensity_crossfit(poked, folds)
        np.testing.assert_array_equal(scores.scores[1][hold], base.scores[1][hold])
        assert not np.array_equal(scores.scores[1][~hold], base.scores[1][~hold])

    def test_single_class_complement_raises(self):
        data = Dataset(
            covariates=np.random.default_rng(11).normal(size=(10, 1)),
            treatment=[1] * 5 + [0] * 5,
            outcome=np.zeros(10),
        )
        folds = FoldAssignment(fold_of=[1] * 5 + [2] * 5, J=2)
        with pytest.raises(EmptyArmError, match="fold 1"):
            fit_propensity_crossfit(data, folds)

    def test_first_covariate_only_hook(self):
        rng = np.random.default_rng(12)
        data, _ = logistic_dataset(rng, 500)
        folds = assign_folds(500, 5, seed=13)
        full = fit_propensity_crossfit(data, folds)
        restricted = fit_propensity_crossfit(data, folds, first_covariate_only=True)
        assert not np.array_equal(full.scores[1], restricted.scores[1])

    def test_multilevel_one_vs_rest(self):
        rng = np.random.default_rng(14)
        w = rng.normal(size=(300, 2))
        a = rng.integers(0, 3, size=300)
        data = Dataset(covariates=w, treatment=a, outcome=np.zeros(300))
        folds = assign_folds(300, 3, seed=15)
        scores = fit_propensity_crossfit(data, folds)
        assert scores.levels == (0, 1, 2)
        assert not scores.complementary


class TestOutcomeCrossfit:
    def test_exact_linear_recovery(self):
        rng = np.random.default_rng(16)
        w = rng.uniform(-1, 1, size=(400, 2))
        a = rng.integers(0, 2, size=400)
        y = 2.0 + w[:, 0] + a
        data = Dataset(covariates=w, treatment=a, outcome=y)
        folds = assign_folds(400, 4, seed=17)
        mu = fit_outcome_crossfit(data, folds, basis_degree=1)
        np.testing.assert_allclose(mu[:, 1] - mu[:, 0], 1.0, atol=1e-6)

    def test_constant_outcome(self):
        rng = np.random.default_rng(18)
        data = Dataset(
            covariates=rng.normal(size=(100, 2)),
            treatment=rng.integers(0, 2, size=100),
            outcome=np.full(100, 3.25),
        )
        folds = assign_folds(100, 5, seed=19)
        mu = fit_outcome_crossfit(data, folds)
        np.testing.assert_allclose(mu, 3.25, atol=1e-6)

    def test_pure_noise_effect_near_zero(self):
        rng = np.random.default_rng(20)
        n = 2000
        data = Dataset(
            covariates=rng.uniform(-1, 1, size=(n, 3)),
            treatment=rng.integers(0, 2, size=n),
            outcome=rng.standard_normal(n),
        )
        folds = assign_folds(n, 10, seed=21)
        mu = fit_outcome_crossfit(data, folds)
        gap = np.mean(mu[:, 1] - mu[:, 0])
        assert abs(gap) <= 3 * np.sqrt(4.0 / n)

    def test_missing_arm_raises(self):
        data = Dataset(
            covariates=np.zeros((6, 1)),
            treatment=[1, 1, 1, 0, 1, 1],
            outcome=np.zeros(6),
        )
        folds = FoldAssignment(fold_of=[1, 1, 1, 1, 2, 2], J=2)
        with pytest.raises(EmptyArmError, match="fold 1"):
            fit_outcome_crossfit(data, folds)

    def test_rank_deficient_design_is_absorbed(self):
        rng = np.random.default_rng(22)
        w = rng.normal(size=(120, 2))
        w = np.column_stack([w, w[:, 0]])  # duplicated column
        data = Dataset(covariates=w, treatment=rng.integers(0, 2, size=120), outcome=rng.normal(size=120))
        folds = assign_folds(120, 4, seed=23)
        mu = fit_outcome_crossfit(data, folds, basis_degree=2)
        assert np.all(np.isfinite(mu))
