import numpy as np
import pytest

from rslp.linalg import (DesignMatrix, bic_score, elastic_net_fit, ols_fit,
                         principal_components, ridge_fit)


def design(values, labels=None):
    values = np.asarray(values, dtype=float)
    if labels is None:
        labels = tuple(f"c{j}" for j in range(values.shape[1]))
    return DesignMatrix(values, labels)


class TestOls:
    def test_exact_fit(self):
        X = design(np.column_stack([np.ones(3), [1.0, 2.0, 3.0]]))
        fit = ols_fit(X, [1.0, 2.0, 3.0])
        np.testing.assert_allclose(fit.coefficients, [0.0, 1.0], atol=1e-12)
        assert fit.rss < 1e-20
        assert not fit.rank_deficient

    def test_intercept_only_is_mean(self):
        fit = ols_fit(design(np.ones((3, 1))), [2.0, 4.0, 6.0])
        np.testing.assert_allclose(fit.coefficients, [4.0])
        np.testing.assert_allclose(fit.residuals, [-2.0, 0.0, 2.0])

    def test_normal_equations_oracle(self):
        # Frozen from solving X'X beta = X'y by hand:
        # X'X = [[4, 6], [6, 14]], X'y = [9, 18] -> beta = (0.9, 0.9), rss = 0.7
        X = design(np.column_stack([np.ones(4), [0.0, 1.0, 2.0, 3.0]]))
        fit = ols_fit(X, [1.0, 2.0, 2.0, 4.0])
        np.testing.assert_allclose(fit.coefficients, [0.9, 0.9], atol=1e-12)
        np.testing.assert_allclose(fit.rss, 0.7, rtol=1e-12)

    def test_rss_matches_residuals(self):
        rng = np.random.default_rng(0)
        X = design(rng.standard_normal((20, 3)))
        y = rng.standard_normal(20)
        fit = ols_fit(X, y)
        assert abs(fit.rss - np.sum(fit.residuals**2)) <= 1e-8 * max(fit.rss, 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="rows"):
            ols_fit(design(np.ones((3, 1))), [1.0, 2.0])

    def test_empty_design(self):
        with pytest.raises(ValueError, match="empty"):
            DesignMatrix(np.empty((0, 0)), ())

    def test_rank_deficient_minimum_norm(self):
        col = np.array([1.0, 2.0, 3.0, 4.0])
        X = design(np.column_stack([col, col]))
        y = 2.0 * col
        fit = ols_fit(X, y)
        assert fit.rank_deficient
        expected = np.linalg.pinv(X.values) @ y  # minimum-norm solution
        np.testing.assert_allclose(fit.coefficients, expected, atol=1e-10)
        np.testing.assert_allclose(fit.coefficients, [1.0, 1.0], atol=1e-10)

    def test_residual_orthogonality(self):
        rng = np.random.default_rng(42)
        for trial in range(5):
            X = design(np.column_stack([np.ones(30), rng.standard_normal((30, 4))]))
            y = rng.standard_normal(30)
            fit = ols_fit(X, y)
            gram = np.abs(X.values.T @ fit.residuals).max()
            assert gram < 1e-6 * np.linalg.norm(y)

    def test_near_collinear_detection(self):
        base = np.linspace(0.0, 1.0, 12)
        X = design(np.column_stack([np.ones(12), base, base * (1 + 1e-14)]))
        fit = ols_fit(X, base)
        assert fit.rank_deficient

    def test_bic_convention(self):
        rng = np.random.default_rng(1)
        X = design(rng.standard_normal((25, 3)))
        y = rng.standard_normal(25)
        fit = ols_fit(X, y)
        expected = 25 * np.log(fit.rss / 25) + 3 * np.log(25)
        assert fit.bic == pytest.approx(expected, rel=1e-12)

    def test_bic_increases_with_params(self):
        scores = [bic_score(3.7, 40, p) for p in range(1, 8)]
        assert all(a < b for a, b in zip(scores, scores[1:]))

    def test_sigma2_dof(self):
        rng = np.random.default_rng(3)
        X = design(rng.standard_normal((10, 2)))
        y = rng.standard_normal(10)
        fit = ols_fit(X, y)
        assert fit.sigma2 == pytest.approx(fit.rss / 8)


class TestRidge:
    def test_zero_penalty_is_ols(self):
        rng = np.random.default_rng(5)
        X = design(np.column_stack([np.ones(15), rng.standard_normal((15, 3))]))
        y = rng.standard_normal(15)
        ols = ols_fit(X, y)
        ridge = ridge_fit(X, y, 0.0, [1, 2, 3])
        np.testing.assert_allclose(ridge.coefficients, ols.coefficients, atol=1e-8)

    def test_huge_penalty_kills_penalized_block(self):
        rng = np.random.default_rng(6)
        X = design(np.column_stack([np.ones(20), rng.standard_normal((20, 3))]))
        y = rng.standard_normal(20) + 1.5
        fit = ridge_fit(X, y, 1e12, [1, 2, 3])
        assert np.all(np.abs(fit.coefficients[1:]) < 1e-4)
        # the unpenalized intercept keeps fitting the mean
        assert fit.coefficients[0] == pytest.approx(y.mean(), abs=1e-3)

    def test_closed_form_oracle(self):
        # 5 observations, 2 regressors, penalty 1 on the second column:
        # solve (X'X + D) beta = X'y directly as the oracle.
        X_vals = np.array([[1.0, 0.2], [1.0, -0.4], [1.0, 1.3], [1.0, 0.7], [1.0, -1.1]])
        y = np.array([0.5, -0.2, 1.9, 1.1, -1.4])
        D = np.diag([0.0, 1.0])
        expected = np.linalg.solve(X_vals.T @ X_vals + D, X_vals.T @ y)
        fit = ridge_fit(design(X_vals), y, 1.0, [1])
        np.testing.assert_allclose(fit.coefficients, expected, atol=1e-10)

    def test_negative_penalty_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            ridge_fit(design(np.ones((3, 1))), [1.0, 2.0, 3.0], -0.5, [0])

    def test_monotone_shrinkage(self):
        rng = np.random.default_rng(7)
        X = design(np.column_stack([np.ones(30), rng.standard_normal((30, 4))]))
        y = rng.standard_normal(30)
        penalized = [1, 2, 3, 4]
        norms = []
        for lam in (0.0, 0.5, 2.0, 10.0, 100.0):
            fit = ridge_fit(X, y, lam, penalized)
            norms.append(np.linalg.norm(fit.coefficients[penalized]))
        assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))

    def test_rss_reported_on_original_data(self):
        rng = np.random.default_rng(8)
        X = design(rng.standard_normal((12, 2)))
        y = rng.standard_normal(12)
        fit = ridge_fit(X, y, 3.0, [0, 1])
        np.testing.assert_allclose(fit.rss, np.sum((y - X.values @ fit.coefficients) ** 2),
                                   rtol=1e-12)


class TestElasticNet:
    def test_unregularized_matches_ols(self):
        rng = np.random.default_rng(9)
        X = design(np.column_stack([np.ones(25), rng.standard_normal((25, 3))]))
        y = rng.standard_normal(25)
        ols = ols_fit(X, y)
        enet = elastic_net_fit(X, y, 0.0, 0.0, [1, 2, 3], max_iter=5000, tol=1e-12)
        assert enet.converged
        np.testing.assert_allclose(enet.coefficients, ols.coefficients, atol=1e-6)

    def test_full_shrinkage(self):
        rng = np.random.default_rng(10)
        X = design(np.column_stack([np.ones(30), rng.standard_normal((30, 4))]))
        y = rng.standard_normal(30)
        fit = elastic_net_fit(X, y, 1e6, 0.0, [1, 2, 3, 4])
        assert np.all(fit.coefficients[1:] == 0.0)

    def test_univariate_soft_threshold_oracle(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal(40)
        y = 0.8 * x + 0.1 * rng.standard_normal(40)
        l1, l2 = 0.05, 0.3
        z = x @ y / 40
        soft = np.sign(z) * max(abs(z) - l1, 0.0)
        expected = soft / (x @ x / 40 + 2 * l2)
        fit = elastic_net_fit(design(x[:, None]), y, l1, l2, [0])
        assert fit.coefficients[0] == pytest.approx(expected, rel=1e-10)

    def test_nonconvergence_flagged_not_raised(self):
        rng = np.random.default_rng(12)
        base = rng.standard_normal(30)
        X = design(np.column_stack([base, base + 1e-4 * rng.standard_normal(30)]))
        y = rng.standard_normal(30)
        fit = elastic_net_fit(X, y, 0.0, 0.0, [], max_iter=2, tol=1e-14)
        assert not fit.converged
        assert fit.n_iter == 2

    def test_negative_penalty_rejected(self):
        with pytest.raises(ValueError):
            elastic_net_fit(design(np.ones((3, 1))), [1.0, 2.0, 3.0], -1.0, 0.0, [0])


class TestPrincipalComponents:
    def test_rank_one_data(self):
        col = np.array([1.0, -2.0, 0.5, 3.0, -1.5, 2.0])
        X = design(np.column_stack([col, col]))
        factors, loadings, ev = principal_components(X, 1)
        total = X.values.var(axis=0, ddof=1).sum()
        assert ev[0] / total == pytest.approx(1.0, abs=1e-8)

    def test_diagonal_covariance_proportions(self):
        s1, s2 = np.sqrt(3.0), np.sqrt(3.0) / 2.0
        a = np.array([1.0, -1.0, 1.0, -1.0]) * s1   # sample variance 4
        b = np.array([1.0, 1.0, -1.0, -1.0]) * s2   # sample variance 1
        factors, loadings, ev = principal_components(design(np.column_stack([a, b])), 2)
        np.testing.assert_allclose(ev / ev.sum(), [0.8, 0.2], atol=1e-10)

    def test_matches_covariance_eigendecomposition(self):
        rng = np.random.default_rng(13)
        values = rng.standard_normal((6, 3))
        X = design(values)
        factors, loadings, ev = principal_components(X, 3)
        centred = values - values.mean(axis=0)
        eigvals, eigvecs = np.linalg.eigh(np.cov(centred, rowvar=False))
        order = np.argsort(eigvals)[::-1]
        np.testing.assert_allclose(ev, eigvals[order], atol=1e-10)
        for j in range(3):
            oracle_scores = centred @ eigvecs[:, order[j]]
            agree = np.allclose(factors[:, j], oracle_scores, atol=1e-8)
            flipped = np.allclose(factors[:, j], -oracle_scores, atol=1e-8)
            assert agree or flipped

    def test_explained_variance_nonincreasing_and_sign_fixed(self):
        rng = np.random.default_rng(14)
        X = design(rng.standard_normal((40, 6)))
        factors, loadings, ev = principal_components(X, 6)
        assert np.all(np.diff(ev) <= 1e-12)
        for j in range(loadings.shape[1]):
            pivot = np.argmax(np.abs(loadings[:, j]))
            assert loadings[pivot, j] >= 0

    def test_nfactors_beyond_rank_rejected(self):
        col = np.arange(5.0)
        X = design(np.column_stack([col, col]))
        with pytest.raises(ValueError, match="rank"):
            principal_components(X, 2)

    def test_nfactors_beyond_shape_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            principal_components(design(np.ones((3, 2)) + np.eye(3, 2)), 3)
