import numpy as np
import pytest

from sparsevar import (
    LambdaPath,
    NumericError,
    PenaltySpec,
    fit_penalized,
    kkt_residual,
    lambda_path,
    scad_penalty_derivative,
    scad_threshold,
    select_lambda,
    soft_threshold,
)


def scad_penalty_value(t, lam, a=3.7):
    """Integrated SCAD penalty, written independently of the library."""
    t = np.abs(np.asarray(t, dtype=float))
    first = lam * t
    middle = -(t ** 2 - 2 * a * lam * t + lam ** 2) / (2 * (a - 1))
    flat = (a + 1) * lam ** 2 / 2
    return np.where(t <= lam, first, np.where(t <= a * lam, middle, flat))


def grid_minimize_scad(omega, lam, a=3.7, pitch=1e-5):
    """Brute-force minimizer of 0.5(b - omega)^2 + scad_penalty(|b|)."""
    half_width = abs(omega) + 3 * lam + 1.0
    grid = np.arange(-half_width, half_width + pitch, pitch)
    objective = 0.5 * (grid - omega) ** 2 + scad_penalty_value(grid, lam, a)
    return grid[int(np.argmin(objective))]


def orthonormal_design(rng, n, d):
    q, _ = np.linalg.qr(rng.normal(size=(n, d)))
    return q


class TestSoftThreshold:
    def test_shrinks(self):
        assert soft_threshold(1.5, 1.0) == pytest.approx(0.5)

    def test_clips_to_zero(self):
        assert soft_threshold(-0.3, 0.5) == 0.0

    def test_zero_input(self):
        assert soft_threshold(0.0, 7.0) == 0.0

    def test_negative_side(self):
        assert soft_threshold(-2.0, 0.5) == pytest.approx(-1.5)


class TestScadThreshold:
    def test_soft_branch(self):
        assert scad_threshold(1.5, 1.0) == pytest.approx(0.5)

    def test_middle_branch(self):
        expected = (2.7 * 3.0 - 3.7) / 1.7
        assert scad_threshold(3.0, 1.0) == pytest.approx(expected)

    def test_identity_branch(self):
        assert scad_threshold(5.0, 1.0) == 5.0

    def test_invalid_a(self):
        with pytest.raises(ValueError):
            scad_threshold(1.0, 1.0, a=2.0)

    @pytest.mark.parametrize("omega", [0.4, 1.5, -1.5, 2.6, 3.1, -3.1, 4.5, -6.0])
    def test_matches_grid_minimizer(self, omega):
        result = scad_threshold(omega, 1.0, a=3.7)
        oracle = grid_minimize_scad(omega, 1.0, a=3.7)
        assert result == pytest.approx(oracle, abs=1e-4)

    def test_branch_boundaries_continuous(self):
        lam, a = 1.0, 3.7
        # the two formulas meeting at |omega| = 2*lam both give lam
        left = np.sign(2 * lam) * max(abs(2 * lam) - lam, 0.0)
        right = ((a - 1) * 2 * lam - a * lam) / (a - 2)
        assert abs(left - right) < 1e-12
        assert scad_threshold(2 * lam, lam, a) == pytest.approx(left, abs=1e-12)
        # at |omega| = a*lam the middle branch meets the identity
        middle = ((a - 1) * a * lam - a * lam) / (a - 2)
        assert abs(middle - a * lam) < 1e-12
        assert scad_threshold(a * lam, lam, a) == pytest.approx(a * lam,
                                                                abs=1e-12)

    def test_odd_symmetry(self):
        for omega in (0.7, 2.3, 5.1):
            assert scad_threshold(-omega, 1.0) == pytest.approx(
                -scad_threshold(omega, 1.0))


class TestScadPenaltyDerivative:
    def test_flat_region(self):
        assert scad_penalty_derivative(0.5, 1.0) == pytest.approx(1.0)

    def test_decay_region(self):
        assert scad_penalty_derivative(2.0, 1.0) == pytest.approx((3.7 - 2.0) / 2.7)

    def test_clipped_region(self):
        assert scad_penalty_derivative(4.0, 1.0) == 0.0

    def test_nonpositive_beta_rejected(self):
        with pytest.raises(ValueError):
            scad_penalty_derivative(0.0, 1.0)

    @pytest.mark.parametrize("beta", [0.3, 0.9, 1.4, 2.5, 3.6, 4.2])
    def test_matches_numerical_derivative(self, beta):
        h = 1e-6
        numeric = (scad_penalty_value(beta + h, 1.0)
                   - scad_penalty_value(beta - h, 1.0)) / (2 * h)
        assert scad_penalty_derivative(beta, 1.0) == pytest.approx(
            numeric, abs=1e-6)


class TestPenaltySpecValidation:
    def test_negative_lambda(self):
        with pytest.raises(ValueError):
            PenaltySpec(kind="lasso", lam=-1.0)

    def test_scad_a_bound(self):
        with pytest.raises(ValueError):
            PenaltySpec(kind="scad", lam=1.0, a=1.5)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            PenaltySpec(kind="ridge", lam=1.0)


class TestLambdaPath:
    def test_two_point_endpoints(self):
        rng = np.random.default_rng(30)
        x = rng.normal(size=(40, 5))
        y = rng.normal(size=40)
        path = lambda_path(x, y, n_points=2, ratio=0.1)
        assert len(path.values) == 2
        assert path.values[1] == pytest.approx(0.1 * path.values[0])

    def test_strictly_decreasing(self):
        rng = np.random.default_rng(31)
        x = rng.normal(size=(30, 4))
        y = rng.normal(size=30)
        path = lambda_path(x, y, n_points=25)
        assert (np.diff(path.values) < 0).all()
        assert (path.values > 0).all()

    def test_orthonormal_lambda_max_direct(self):
        rng = np.random.default_rng(32)
        x = orthonormal_design(rng, 50, 6)
        y = x[:, 0].copy()
        path = lambda_path(x, y)
        centered = y - y.mean()
        shifted = x - x.mean(axis=0)
        scale = np.sqrt((shifted ** 2).mean(axis=0))
        expected = 2.0 * np.abs((shifted / scale).T @ centered).max()
        assert path.values[0] == pytest.approx(expected, rel=1e-12)

    def test_largest_value_forces_null_model(self):
        rng = np.random.default_rng(33)
        x = rng.normal(size=(60, 8))
        y = x @ rng.normal(size=8) + 0.1 * rng.normal(size=60)
        lam_max = lambda_path(x, y).values[0]
        at_max = fit_penalized(x, y, PenaltySpec(kind="lasso", lam=lam_max))
        below = fit_penalized(x, y,
                              PenaltySpec(kind="lasso", lam=0.99 * lam_max))
        assert np.count_nonzero(at_max.coef) == 0
        assert np.count_nonzero(below.coef) > 0

    def test_degenerate_design_rejected(self):
        x = np.ones((20, 3))
        with pytest.raises(NumericError):
            lambda_path(x, np.ones(20))

    def test_constructor_validates(self):
        with pytest.raises(ValueError):
            LambdaPath(values=np.array([1.0, 2.0]), ratio=0.5)


class TestFitPenalizedLasso:
    def test_zero_lambda_is_ols(self):
        rng = np.random.default_rng(34)
        x = rng.normal(size=(60, 8))
        y = x @ rng.normal(size=8) + rng.normal(size=60)
        fit = fit_penalized(x, y, PenaltySpec(kind="lasso", lam=0.0, tol=1e-12))
        design = np.column_stack([np.ones(60), x])
        ols = np.linalg.lstsq(design, y, rcond=None)[0]
        assert fit.intercept == pytest.approx(ols[0], abs=1e-8)
        np.testing.assert_allclose(fit.coef, ols[1:], atol=1e-8)

    def test_orthonormal_closed_form(self):
        rng = np.random.default_rng(35)
        x = orthonormal_design(rng, 80, 10)
        y = rng.normal(size=80)
        lam = 0.3
        fit = fit_penalized(x, y, PenaltySpec(kind="lasso", lam=lam),
                            intercept=False, standardize=False)
        expected = np.array([soft_threshold(x[:, j] @ y, lam / 2)
                             for j in range(10)])
        np.testing.assert_allclose(fit.coef, expected, atol=1e-8)
        assert fit.intercept == 0.0

    def test_kkt_conditions_hold(self):
        rng = np.random.default_rng(36)
        for _ in range(5):
            x = rng.normal(size=(70, 12))
            y = x @ (rng.normal(size=12) * (rng.random(12) < 0.4)) \
                + rng.normal(size=70)
            spec = PenaltySpec(kind="lasso", lam=3.0)
            fit = fit_penalized(x, y, spec)
            displacement, _ = kkt_residual(x, y, fit, spec)
            assert displacement <= 1e-6

    def test_objective_non_increasing(self):
        rng = np.random.default_rng(37)
        x = rng.normal(size=(50, 10))
        y = rng.normal(size=50)
        fit = fit_penalized(x, y, PenaltySpec(kind="lasso", lam=1.0),
                            track_objective=True)
        history = np.asarray(fit.objective_history)
        assert len(history) >= 1
        assert (np.diff(history) <= 1e-10).all()

    def test_restrict_zeroes_excluded_columns(self):
        rng = np.random.default_rng(38)
        x = rng.normal(size=(50, 8))
        y = x[:, 2] * 2.0 + x[:, 5] - x[:, 6] + 0.05 * rng.normal(size=50)
        spec = PenaltySpec(kind="lasso", lam=0.5)
        fit = fit_penalized(x, y, spec, restrict=[2, 5])
        outside = np.setdiff1d(np.arange(8), [2, 5])
        assert (fit.coef[outside] == 0.0).all()
        sub = fit_penalized(x[:, [2, 5]], y, spec)
        np.testing.assert_allclose(fit.coef[[2, 5]], sub.coef, atol=1e-9)
        assert fit.intercept == pytest.approx(sub.intercept, abs=1e-9)

    def test_path_l1_norm_monotone(self):
        rng = np.random.default_rng(39)
        x = rng.normal(size=(60, 10))
        y = x @ rng.normal(size=10) + rng.normal(size=60)
        path = lambda_path(x, y, n_points=20)
        norms = []
        for lam in path.values:
            fit = fit_penalized(x, y, PenaltySpec(kind="lasso", lam=lam,
                                                  tol=1e-10))
            norms.append(np.abs(fit.coef).sum())
        assert all(b >= a - 1e-8 for a, b in zip(norms, norms[1:]))

    def test_non_finite_rejected(self):
        x = np.ones((10, 2))
        x[3, 1] = np.nan
        with pytest.raises(ValueError):
            fit_penalized(x, np.ones(10), PenaltySpec(kind="lasso", lam=1.0))

    def test_sweep_cap_flags_non_convergence(self):
        rng = np.random.default_rng(40)
        base = rng.normal(size=(40, 1))
        x = np.hstack([base + 0.01 * rng.normal(size=(40, 1))
                       for _ in range(6)])
        y = rng.normal(size=40)
        fit = fit_penalized(x, y, PenaltySpec(kind="lasso", lam=1e-6,
                                              tol=1e-14, max_iter=2))
        assert not fit.converged
        assert np.isfinite(fit.coef).all()


class TestFitPenalizedScad:
    def test_large_coefficients_unbiased(self):
        rng = np.random.default_rng(41)
        x = orthonormal_design(rng, 60, 5)
        y = x[:, 1] * 9.0 + 0.01 * rng.normal(size=60)
        lam = 1.0
        fit = fit_penalized(x, y, PenaltySpec(kind="scad", lam=lam),
                            intercept=False, standardize=False)
        omega = x[:, 1] @ y
        assert abs(omega) > 3.7 * lam
        assert fit.coef[1] == pytest.approx(omega, abs=1e-6)

    def test_small_coefficients_zeroed(self):
        rng = np.random.default_rng(42)
        x = orthonormal_design(rng, 60, 5)
        y = 0.05 * rng.normal(size=60)
        fit = fit_penalized(x, y, PenaltySpec(kind="scad", lam=2.0),
                            intercept=False, standardize=False)
        assert np.count_nonzero(fit.coef) == 0

    def test_objective_not_worse_than_lasso(self):
        rng = np.random.default_rng(43)
        x = rng.normal(size=(80, 10))
        y = x @ (rng.normal(size=10) * (rng.random(10) < 0.5)) \
            + rng.normal(size=80)
        lam = 2.0

        def objective(fit):
            resid = y - fit.intercept - x @ fit.coef
            return (resid ** 2).sum() + scad_penalty_value(
                fit.coef, lam).sum()

        scad_fit = fit_penalized(x, y, PenaltySpec(kind="scad", lam=lam))
        lasso_fit = fit_penalized(x, y, PenaltySpec(kind="lasso", lam=lam))
        assert objective(scad_fit) <= objective(lasso_fit) + 1e-9


class TestSelectLambda:
    def test_pure_noise_selects_null_model(self):
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            x = rng.normal(size=(100, 10))
            y = rng.normal(size=100)
            lam, table = select_lambda(x, y, "lasso", lambda_path(x, y))
            chosen = next(row for row in table if row["lam"] == lam)
            if chosen["df"] == 0:
                hits += 1
        assert hits >= 18

    def test_strong_signal_keeps_true_column(self):
        rng = np.random.default_rng(44)
        x = rng.normal(size=(200, 15))
        y = 3.0 * x[:, 4] + 0.2 * rng.normal(size=200)
        lam, _ = select_lambda(x, y, "lasso", lambda_path(x, y))
        fit = fit_penalized(x, y, PenaltySpec(kind="lasso", lam=lam))
        assert fit.coef[4] != 0.0

    def test_single_point_path(self):
        rng = np.random.default_rng(45)
        x = rng.normal(size=(50, 5))
        y = rng.normal(size=50)
        path = LambdaPath(values=np.array([0.7]), ratio=1.0)
        lam, table = select_lambda(x, y, "lasso", path)
        assert lam == 0.7
        assert len(table) == 1

    def test_bic_ties_prefer_larger_lambda(self):
        # a path whose two largest values both give the null model must
        # report the larger of the two
        rng = np.random.default_rng(46)
        x = rng.normal(size=(60, 6))
        y = rng.normal(size=60)
        lam_max = lambda_path(x, y).values[0]
        path = LambdaPath(values=np.array([4 * lam_max, 2 * lam_max,
                                           lam_max / 50]), ratio=1.0 / 200)
        lam, table = select_lambda(x, y, "lasso", path)
        null_rows = [row for row in table if row["df"] == 0]
        assert len(null_rows) == 2
        assert null_rows[0]["bic"] == null_rows[1]["bic"]
        assert min(row["bic"] for row in table) == null_rows[0]["bic"]
        assert lam == pytest.approx(4 * lam_max)
