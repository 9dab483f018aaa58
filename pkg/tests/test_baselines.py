import numpy as np
import pytest

from caspian.baselines import (
    baseline_predictor,
    clip_negative,
    fit_kriging_pca,
    fit_lasso_poly,
    fit_linear,
    fit_pca,
    fit_svr_per_location,
    global_mean_depth,
    poly_expand,
    predict_linear,
    select_lambda_cv,
)
from caspian.baselines.kriging import KrigingError
from caspian.gridcodec import CoastalLocation
from caspian.scenario import parse_scenario


def binary_design(n, d, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, d)).astype(float)
    return np.unique(X, axis=0)


class TestBaselinePredictor:
    def locs(self):
        return [CoastalLocation(id=i, lon=float(i), lat=0.0, segment_id=i % 3) for i in range(6)]

    def test_all_protected_is_dry(self):
        out = baseline_predictor(parse_scenario("111"), self.locs(), dataset_mean_depth=1.3)
        assert np.array_equal(out, np.zeros(6))

    def test_none_protected_is_global_mean(self):
        out = baseline_predictor(parse_scenario("000"), self.locs(), dataset_mean_depth=1.3)
        assert np.allclose(out, 1.3)

    def test_mixed_scenario_rule(self):
        out = baseline_predictor(parse_scenario("101"), self.locs(), dataset_mean_depth=2.0)
        for i, loc in enumerate(sorted(self.locs(), key=lambda l: l.id)):
            expected = 0.0 if loc.segment_id in (0, 2) else 2.0
            assert out[i] == expected

    def test_global_mean_is_scalar_over_everything(self):
        vectors = [np.array([0.0, 2.0]), np.array([4.0, 6.0])]
        assert global_mean_depth(vectors) == 3.0


class TestLinear:
    def test_exact_recovery(self):
        X = binary_design(40, 5, seed=1)
        rng = np.random.default_rng(2)
        W = rng.normal(size=(5, 3))
        b = rng.normal(size=3)
        Y = X @ W + b
        model = fit_linear(X, Y)
        assert np.abs(predict_linear(model, X) - Y).max() < 1e-8

    def test_constant_targets(self):
        X = binary_design(20, 4, seed=3)
        Y = np.full((X.shape[0], 2), 1.5)
        model = fit_linear(X, Y)
        assert np.abs(model.coef).max() < 1e-8
        assert np.allclose(model.intercept, 1.5)

    def test_rank_deficiency_minimum_norm(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])  # collinear columns
        Y = np.array([[0.0], [1.0], [2.0]])
        model = fit_linear(X, Y)
        assert model.rank_deficient
        assert np.abs(predict_linear(model, X) - Y).max() < 1e-10


class TestPolyExpand:
    def test_dimension_17(self):
        assert poly_expand(np.zeros(17)).shape[0] == 1 + 17 + 17 * 16 // 2 == 154

    def test_small_example(self):
        out = poly_expand(np.array([1.0, 0.0, 1.0]))
        assert np.array_equal(out, [1, 1, 0, 1, 0, 1, 0])

    def test_zero_vector(self):
        out = poly_expand(np.zeros(4))
        assert out[0] == 1 and not out[1:].any()

    @pytest.mark.parametrize("d", range(1, 21))
    def test_dimension_formula(self, d):
        assert poly_expand(np.zeros(d)).shape[0] == 1 + d + d * (d - 1) // 2

    def test_accepts_scenarios(self):
        assert poly_expand(parse_scenario("101")).shape[0] == 7


class TestLassoPoly:
    def test_large_lambda_collapses_to_mean(self):
        X = binary_design(30, 4, seed=4)
        rng = np.random.default_rng(5)
        Y = rng.uniform(0, 2, size=(X.shape[0], 3))
        model = fit_lasso_poly(X, Y, lam=1e6)
        assert np.abs(model.coef).max() == 0.0
        assert np.allclose(model.intercept, Y.mean(axis=0))

    def test_lambda_zero_matches_least_squares(self):
        X = binary_design(40, 5, seed=6)
        rng = np.random.default_rng(7)
        Y = rng.normal(size=(X.shape[0], 2))
        model = fit_lasso_poly(X, Y, lam=0.0)
        Z = poly_expand(X)
        beta = np.linalg.lstsq(Z, Y, rcond=None)[0]
        assert np.abs(model.predict(X) - Z @ beta).max() < 1e-6

    def test_recovers_sparse_interaction_support(self):
        X = binary_design(50, 6, seed=8)
        y = 1.0 + 2.0 * X[:, 0] - 1.5 * X[:, 2] * X[:, 3]
        model = fit_lasso_poly(X, y, lam=1e-3)
        pred = model.predict(X)
        assert np.abs(pred[:, 0] - y).max() < 0.05
        # the interaction column must carry weight
        names = ["x0"] + [f"x{i}" for i in range(1, 6)]
        iu, ju = np.triu_indices(6, k=1)
        inter_idx = 6 + int(np.where((iu == 2) & (ju == 3))[0][0])
        assert abs(model.coef[inter_idx, 0]) > 0.5

    def test_matches_proximal_gradient_oracle(self):
        # Independent solver: ISTA on the same objective.
        X = binary_design(25, 4, seed=9)
        rng = np.random.default_rng(10)
        y = rng.normal(size=X.shape[0])
        lam = 0.02
        model = fit_lasso_poly(X, y, lam=lam, tol=1e-12, max_iter=50000)

        Z = poly_expand(X)[:, 1:]
        zm, ym = Z.mean(axis=0), y.mean()
        Zc, yc = Z - zm, y - ym
        n = len(y)
        w = np.zeros(Zc.shape[1])
        step = 1.0 / (np.linalg.norm(Zc, 2) ** 2 / n)
        for _ in range(200000):
            grad = Zc.T @ (Zc @ w - yc) / n
            w_new = np.sign(w - step * grad) * np.maximum(np.abs(w - step * grad) - step * lam, 0)
            if np.abs(w_new - w).max() < 1e-13:
                w = w_new
                break
            w = w_new
        assert np.abs(model.coef[:, 0] - w).max() < 1e-6

    def test_cv_selection_returns_grid_member(self):
        X = binary_design(30, 5, seed=11)
        rng = np.random.default_rng(12)
        y = X[:, 0] + X[:, 1] * X[:, 2] + 0.05 * rng.normal(size=X.shape[0])
        grid = np.array([1e-4, 1e-3, 1e-2, 1e-1])
        lam = select_lambda_cv(X, y, lambdas=grid, folds=4, seed=1)
        assert lam in grid


class TestSvr:
    def test_constant_target_within_tube(self):
        X = binary_design(20, 4, seed=13)
        y = np.full(X.shape[0], 0.7)
        model = fit_svr_per_location(X, y, C=5.0, epsilon=0.05)
        assert np.abs(model.predict(X).ravel() - 0.7).max() <= 0.05 + 1e-6

    def test_linear_recovery(self):
        X = binary_design(40, 5, seed=14)
        w = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
        y = X @ w + 0.25
        model = fit_svr_per_location(X, y, C=1000.0, epsilon=0.0)
        assert np.abs(model.predict(X).ravel() - y).max() < 1e-3

    def test_one_model_per_output(self):
        X = binary_design(20, 4, seed=15)
        Y = np.random.default_rng(16).normal(size=(X.shape[0], 7))
        model = fit_svr_per_location(X, Y)
        assert model.n_outputs == 7


class TestPca:
    def test_rank_one(self):
        rng = np.random.default_rng(17)
        Y = np.outer(rng.normal(size=12), rng.normal(size=30))
        basis = fit_pca(Y, variance_threshold=0.99)
        assert basis.q == 1
        assert np.abs(basis.reconstruct(basis.project(Y)) - Y).max() < 1e-10

    def test_threshold_one_is_lossless(self):
        rng = np.random.default_rng(18)
        Y = rng.normal(size=(10, 25))
        basis = fit_pca(Y, variance_threshold=1.0)
        assert np.abs(basis.reconstruct(basis.project(Y)) - Y).max() < 1e-8

    def test_known_rank_spectrum(self):
        rng = np.random.default_rng(19)
        U = np.linalg.qr(rng.normal(size=(40, 5)))[0]
        V = np.linalg.qr(rng.normal(size=(60, 5)))[0]
        Y = (U * np.array([10, 8, 6, 4, 2])) @ V.T
        basis = fit_pca(Y, variance_threshold=0.99)
        assert basis.q == 5

    def test_components_orthonormal(self):
        rng = np.random.default_rng(20)
        basis = fit_pca(rng.normal(size=(15, 40)), variance_threshold=0.95)
        gram = basis.components @ basis.components.T
        assert np.abs(gram - np.eye(basis.q)).max() < 1e-10


class TestKrigingPca:
    def test_interpolates_training_points(self):
        X = binary_design(30, 6, seed=21)
        rng = np.random.default_rng(22)
        Y = np.column_stack([
            X @ rng.normal(size=6) + 1,
            np.maximum(0, X @ rng.normal(size=6)),
            X[:, 0] * X[:, 1] + 0.3 * X[:, 4],
        ])
        model = fit_kriging_pca(X, Y, pca_threshold=1.0)
        pred = model.predict(X)
        truncated = model.basis.reconstruct(model.basis.project(Y))
        assert np.abs(pred - truncated).max() < 1e-6

    def test_linear_data_matches_linear_regression(self):
        X = binary_design(25, 5, seed=23)
        rng = np.random.default_rng(24)
        w = rng.normal(size=5)
        Y = np.outer(X @ w + 0.5, np.array([1.0, -2.0]))
        kriging = fit_kriging_pca(X, Y, pca_threshold=0.999)
        linear = fit_linear(X, Y)
        Xq = binary_design(12, 5, seed=25)
        assert np.abs(kriging.predict(Xq) - predict_linear(linear, Xq)).max() < 1e-4

    def test_correlation_matrices_are_n_by_n(self):
        X = binary_design(18, 4, seed=26)
        rng = np.random.default_rng(27)
        Y = rng.normal(size=(X.shape[0], 10))
        model = fit_kriging_pca(X, Y, pca_threshold=0.9)
        for comp in model.components:
            assert comp.alpha.shape == (X.shape[0],)
            assert comp.lengthscales.shape == (4,)

    def test_duplicate_inputs_rejected(self):
        X = np.array([[0.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        Y = np.random.default_rng(28).normal(size=(3, 4))
        with pytest.raises(KrigingError):
            fit_kriging_pca(X, Y)


class TestPersistence:
    def test_roundtrip_parity_per_method(self, tmp_path):
        from caspian.baselines.persist import load_baseline, save_baseline

        X = binary_design(30, 5, seed=30)
        rng = np.random.default_rng(31)
        Y = np.column_stack([X @ rng.normal(size=5) + 1, X[:, 0] * X[:, 1] + X[:, 3]])
        Xq = binary_design(10, 5, seed=32)

        linear = fit_linear(X, Y)
        save_baseline(tmp_path / "linear", "linear", model=linear)
        back = load_baseline(tmp_path / "linear")
        assert np.abs(back.predict(Xq) - predict_linear(linear, Xq)).max() < 1e-5

        lasso = fit_lasso_poly(X, Y, lam=1e-3)
        save_baseline(tmp_path / "lasso", "lasso", model=lasso)
        back = load_baseline(tmp_path / "lasso")
        assert np.abs(back.predict(Xq) - lasso.predict(Xq)).max() < 1e-5

        svr = fit_svr_per_location(X, Y, C=5.0, epsilon=0.05)
        save_baseline(tmp_path / "svr", "svr", model=svr)
        back = load_baseline(tmp_path / "svr")
        assert np.abs(back.predict(Xq) - svr.predict(Xq)).max() < 1e-5

        kriging = fit_kriging_pca(X, Y, pca_threshold=0.999)
        save_baseline(tmp_path / "kriging", "kriging", model=kriging)
        back = load_baseline(tmp_path / "kriging")
        # float32 blobs: parity to single precision only
        assert np.abs(back.predict(Xq) - kriging.predict(Xq)).max() < 1e-3

        save_baseline(tmp_path / "naive", "naive", global_mean=1.25)
        back = load_baseline(tmp_path / "naive")
        assert back.global_mean == 1.25


class TestClipNegative:
    def test_examples(self):
        assert np.array_equal(clip_negative(np.array([-0.2, 0.3])), [0.0, 0.3])
        assert np.array_equal(clip_negative(np.array([0.1, 0.2])), [0.1, 0.2])
        assert np.array_equal(clip_negative(np.array([-1.0, -2.0])), [0.0, 0.0])

    def test_idempotent(self):
        rng = np.random.default_rng(29)
        x = rng.normal(size=50)
        once = clip_negative(x)
        assert np.array_equal(clip_negative(once), once)
