import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from provnet.errors import BoundaryRho, DimensionMismatch, NameClash, RankDeficient, SingularFilter
from provnet.sdm import (
    LogDet,
    build_design,
    concentrated_loglik,
    fit_ols,
    fit_sdm,
    fit_spatial_lag,
    lm_residual_test,
    log_det_spatial_filter,
    model_compare,
    significant_tokens,
)
from provnet.synth import DgpSpec, gen_lattice, gen_sdm, random_regions
from provnet.weights import build_knn, spatial_lag


@pytest.fixture(scope="module")
def ring500():
    return build_knn(gen_lattice(500, "ring", 7), 7)


def _brute_logdet(W, rho):
    sign, val = np.linalg.slogdet(np.eye(W.n) - rho * W.dense())
    assert sign > 0
    return val


class TestDesign:
    def test_single_covariate(self, W76, rng):
        x = rng.normal(size=76)
        d = build_design(x, W76)
        assert d.Z.shape == (76, 3) and d.names == ("const", "x1", "W_x1")
        np.testing.assert_allclose(d.Z[:, 2], spatial_lag(W76, x), atol=1e-12)

    def test_seven_covariates(self, W76, rng):
        assert build_design(rng.normal(size=(76, 7)), W76).Z.shape == (76, 15)

    def test_constant_column_lag_is_constant(self, W76, rng):
        X = np.column_stack([rng.normal(size=76), np.full(76, 2.5)])
        d = build_design(X, W76)
        np.testing.assert_allclose(d.Z[:, 4], 2.5, atol=1e-12)
        with pytest.raises(RankDeficient) as info:
            fit_sdm(rng.normal(size=76), X, W76)
        assert "const" in info.value.columns and "x2" in info.value.columns

    def test_name_clash(self, W76, rng):
        with pytest.raises(NameClash):
            build_design(rng.normal(size=(76, 2)), W76, names=["a", "W_a"])

    def test_row_mismatch(self, W76, rng):
        with pytest.raises(DimensionMismatch):
            build_design(rng.normal(size=(10, 2)), W76)


class TestLogDet:
    def test_zero(self, W76):
        assert log_det_spatial_filter(W76, 0.0) == 0.0
        assert log_det_spatial_filter(W76, 0.0, "lu") == 0.0

    @pytest.mark.parametrize("rho", [-0.9, -0.5, 0.3, 0.95])
    def test_two_by_two_closed_form(self, W2, rho):
        for method in ("eig", "lu"):
            assert abs(log_det_spatial_filter(W2, rho, method) - np.log(1 - rho ** 2)) < 1e-12

    def test_methods_agree_with_dense_slogdet(self, rng):
        for seed in range(5):
            W = build_knn(random_regions(60, seed=seed), int(rng.integers(1, 8)))
            eig, lu = LogDet(W, "eig"), LogDet(W, "lu")
            for rho in np.round(np.arange(-0.9, 0.91, 0.1), 10):
                ref = _brute_logdet(W, rho)
                assert abs(eig(rho) - ref) < 1e-8 and abs(lu(rho) - ref) < 1e-8

    def test_singular_at_unit_rho(self, W2):
        with pytest.raises(SingularFilter):
            log_det_spatial_filter(W2, 1.0, "lu")

    def test_auto_switches_to_lu(self, W76):
        assert LogDet(W76).method == "eig"


class TestOls:
    def test_noiseless_recovery(self, rng):
        Z = np.column_stack([np.ones(40), rng.normal(size=(40, 3))])
        b = np.array([1.0, -2.0, 0.5, 3.0])
        fit = fit_ols(Z @ b, Z)
        np.testing.assert_allclose(fit.coefficients, b, atol=1e-9)
        assert np.abs(fit.residuals).max() < 1e-9

    def test_intercept_only_is_mean(self, rng):
        y = rng.normal(3, 2, size=30)
        fit = fit_ols(y, np.ones((30, 1)))
        assert abs(fit.coefficients[0] - y.mean()) < 1e-12
        assert abs(fit.sigma2 - y.var()) < 1e-12
        assert abs(fit.aic - (4 - 2 * fit.loglik)) < 1e-12

    def test_coverage_across_seeds(self, W76):
        hits = 0
        b = np.array([1.0, 0.5, -0.3])
        for seed in range(40):
            r = np.random.default_rng(seed)
            x = r.normal(size=76)
            d = build_design(x, W76)
            fit = fit_ols(d.Z @ b + 0.1 * r.normal(size=76), d)
            hits += np.all(np.abs(fit.coefficients - b) < 4 * fit.se)
        assert hits >= 38


class TestFit:
    def test_degenerate_collapses_to_ols(self, W76):
        spec = DgpSpec(0.0, (1.0, -0.5), (0.3, 0.2), 2.0, 0.0, seed=4)
        s = gen_sdm(W76, spec)
        fit = fit_sdm(s.y, s.X, W76)
        ols = fit_ols(s.y, build_design(s.X, W76))
        assert abs(fit.rho) < 1e-6
        np.testing.assert_allclose(fit.beta, spec.beta, atol=1e-8)
        np.testing.assert_allclose(fit.theta, spec.theta, atol=1e-8)
        assert abs(fit.loglik - ols.loglik) < 1e-8
        assert abs(model_compare(fit, ols).delta_aic + 2) < 0.5

    def test_recovery_ring(self, ring500):
        spec = DgpSpec(0.5, (1.0, -1.0), (0.5, 0.25), 1.0, 0.2, seed=1)
        s = gen_sdm(ring500, spec)
        fit = fit_sdm(s.y, s.X, ring500)
        assert 0.4 <= fit.rho <= 0.6
        truth = np.array([spec.intercept, *spec.beta, *spec.theta])
        assert np.all(np.abs(fit.coefficients - truth) < 4 * fit.se)
        assert fit.convergence["bracket_width"] <= 1e-8

    def test_beats_every_grid_point(self, ring500):
        s = gen_sdm(ring500, DgpSpec(0.5, (1.0, -1.0), (0.5, 0.25), 1.0, 0.2, seed=2))
        fit = fit_sdm(s.y, s.X, ring500)
        design = build_design(s.X, ring500)
        grid = concentrated_loglik(s.y, design, ring500, np.linspace(-0.999, 0.999, 201))
        assert fit.loglik >= grid.max()
        assert abs(concentrated_loglik(s.y, design, ring500, fit.rho) - fit.loglik) < 1e-9

    def test_matches_independent_optimizer(self, W76):
        s = gen_sdm(W76, DgpSpec(0.4, (1.0,), (0.0,), 0.5, 1.0, seed=8))
        fit = fit_spatial_lag(s.y, s.X, W76)
        Z = np.column_stack([np.ones(76), s.X])
        D = W76.dense()

        def negll(rho):
            Ay = s.y - rho * D @ s.y
            b, *_ = np.linalg.lstsq(Z, Ay, rcond=None)
            r = Ay - Z @ b
            return 38 * np.log(r @ r / 76) - _brute_logdet(W76, rho)

        ref = minimize_scalar(negll, bounds=(-0.99, 0.99), method="bounded", options={"xatol": 1e-10})
        assert abs(fit.rho - ref.x) < 1e-6
        assert fit.theta.size == 0 and fit.names == ("const", "x1")

    def test_aic_identity(self, W76):
        s = gen_sdm(W76, DgpSpec(0.3, (1.0, 2.0), (0.5, 0.0), 0.0, 1.0, seed=3))
        fit = fit_sdm(s.y, s.X, W76)
        assert fit.n_params == 2 * 2 + 3
        assert fit.aic == 2 * fit.n_params - 2 * fit.loglik
        assert fit.sigma2 > 0 and 0 <= fit.p_rho <= 1

    def test_scale_invariance(self, W76):
        s = gen_sdm(W76, DgpSpec(0.3, (1.0,), (0.5,), 0.0, 1.0, seed=5))
        a = fit_sdm(s.y, s.X, W76)
        b = fit_sdm(10 * s.y, s.X, W76)
        assert abs(a.rho - b.rho) < 1e-6
        np.testing.assert_allclose(b.coefficients, 10 * a.coefficients, rtol=1e-5, atol=1e-6)

    def test_boundary(self, W76):
        s = gen_sdm(W76, DgpSpec(0.9, (1.0,), (0.0,), 0.0, 0.05, seed=6))
        with pytest.raises(BoundaryRho):
            fit_sdm(s.y, s.X, W76, bounds=(-0.5, 0.5))

    def test_lr_p_value_small_under_strong_rho(self, W76):
        s = gen_sdm(W76, DgpSpec(0.7, (1.0,), (0.5,), 0.0, 0.5, seed=9))
        fit = fit_sdm(s.y, s.X, W76)
        assert fit.p_rho < 0.01 and fit.lr_rho > 0


class TestTokens:
    def test_sign_and_order(self):
        toks = significant_tokens(["living", "health", "income"], [0.4, -0.2, 0.1], [0.01, 0.02, 0.5])
        assert toks == ["health-", "living+"]

    def test_none_significant(self):
        assert significant_tokens(["a"], [1.0], [0.9]) == []


class TestDiagnostics:
    def test_lm_on_correct_fit(self, W76):
        s = gen_sdm(W76, DgpSpec(0.5, (1.0,), (0.5,), 0.0, 1.0, seed=10))
        lm = lm_residual_test(fit_sdm(s.y, s.X, W76), W76, nsim=199, seed=1)
        assert lm.method == "moran-permutation-residuals" and 1 / 200 <= lm.p_value <= 1

    def test_compare_identity(self, W76):
        s = gen_sdm(W76, DgpSpec(0.0, (1.0,), (0.5,), 0.0, 1.0, seed=12))
        fit = fit_sdm(s.y, s.X, W76)
        ols = fit_ols(s.y, build_design(s.X, W76))
        cmp = model_compare(fit, ols)
        assert abs(cmp.delta_aic - (cmp.lr - 2)) < 1e-9
        assert cmp.lr >= 0

    def test_compare_needs_same_y(self, W76, rng):
        s = gen_sdm(W76, DgpSpec(0.2, (1.0,), (0.5,), seed=1))
        fit = fit_sdm(s.y, s.X, W76)
        ols = fit_ols(s.y + 1, build_design(s.X, W76))
        with pytest.raises(DimensionMismatch):
            model_compare(fit, ols)
