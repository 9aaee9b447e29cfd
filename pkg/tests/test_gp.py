import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hpopt import gp
from hpopt.errors import DataError, NumericalError, ParamDomainError
from hpopt.gp import GPFitConfig, GPModel, Kernel

from conftest import central_difference, make_random_model


def dense_lml(model):
    """Log marginal likelihood straight from the definition, no Cholesky reuse."""
    K = model.kernel(model.train_x) + (model.noise_variance + model.jitter) * np.eye(len(model.train_y))
    sign, logdet = np.linalg.slogdet(K)
    assert sign > 0
    y = model.train_y
    return -0.5 * y @ np.linalg.solve(K, y) - 0.5 * logdet - 0.5 * len(y) * math.log(2 * math.pi)


class TestKernel:
    @pytest.mark.parametrize("kind", gp.KERNELS)
    def test_psd(self, kind, rng):
        for _ in range(20):
            d = int(rng.integers(1, 5))
            k = Kernel(kind, rng.uniform(0.05, 2.0, d), rng.uniform(0.1, 5.0))
            K = k(rng.random((int(rng.integers(2, 30)), d)))
            np.testing.assert_array_equal(K, K.T)
            assert np.linalg.eigvalsh(K).min() >= -1e-8

    def test_matern_closed_form(self):
        k = Kernel("matern52", [0.5], 2.0)
        r = 0.3 / 0.5
        expected = 2.0 * (1 + math.sqrt(5) * r + 5 * r * r / 3) * math.exp(-math.sqrt(5) * r)
        assert k(np.array([[0.1]]), np.array([[0.4]]))[0, 0] == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("kind", gp.KERNELS)
    def test_cross_gradient(self, kind, rng):
        k = Kernel(kind, rng.uniform(0.2, 1.0, 3), 1.3)
        X = rng.random((5, 3))
        x = rng.random(3)
        _, dk = k.cross_with_gradient(x, X)
        fd = central_difference(lambda z: k.cross_with_gradient(z, X)[0], x, 1e-6)
        np.testing.assert_allclose(dk, fd.T, rtol=1e-6, atol=1e-9)

    def test_rejects_bad_hyperparameters(self):
        with pytest.raises(Exception):
            Kernel("matern52", [0.0], 1.0)
        with pytest.raises(Exception):
            Kernel("periodic", [1.0], 1.0)


class TestModel:
    def test_single_point_interpolation(self):
        model = gp.fit([[0.5]], [0.0])
        mean, _ = model.predict([0.5])
        assert mean == 0.0

    @pytest.mark.parametrize("y", [0.0, 1.7, -3.0])
    def test_single_point_lml_closed_form(self, y):
        v, n = 1.3, 0.2
        model = GPModel.build(Kernel("matern52", [0.4], v), [[0.2]], [y], n)
        expected = -0.5 * y * y / (v + n) - 0.5 * math.log(2 * math.pi * (v + n))
        assert gp.log_marginal_likelihood(model) == pytest.approx(expected, rel=1e-13)

    def test_lml_matches_dense(self, rng):
        for _ in range(20):
            model = make_random_model(rng, int(rng.integers(1, 5)), noise=1e-3)
            assert model.log_marginal_likelihood() == pytest.approx(dense_lml(model), rel=1e-9)

    def test_lml_sign_symmetry(self, rng):
        m = make_random_model(rng, 2)
        flipped = GPModel.build(m.kernel, m.train_x, -m.train_y, m.noise_variance)
        assert flipped.log_marginal_likelihood() == pytest.approx(m.log_marginal_likelihood(), rel=1e-12)

    def test_duplicate_point(self):
        k = Kernel("rbf", [0.2], 1.0)
        X, y = np.array([[0.1], [0.6]]), np.array([0.8, -0.4])
        one = GPModel.build(k, X, y, 1e-6)
        two = GPModel.build(k, np.vstack([X, X[:1]]), np.append(y, y[0]), 1e-6)
        assert two.log_marginal_likelihood() != pytest.approx(one.log_marginal_likelihood())
        assert two.log_marginal_likelihood() == pytest.approx(dense_lml(two), rel=1e-9)
        assert abs(two.predict(X[0])[0] - one.predict(X[0])[0]) <= 1e-6

    def test_cholesky_reconstructs(self, rng):
        for _ in range(10):
            m = make_random_model(rng, 3, noise=1e-4)
            K = m.kernel(m.train_x) + m.noise_variance * np.eye(len(m.train_y))
            err = np.linalg.norm(m.chol @ m.chol.T - K) / np.linalg.norm(K)
            assert err <= 1e-8

    def test_noiseless_interpolation(self):
        k = Kernel("matern52", [0.3], 1.5)
        X = np.array([[0.0], [0.35], [0.7], [1.0]])
        y = np.array([1.0, -0.5, 2.0, 0.3])
        m = GPModel.build(k, X, y, 1e-12)
        for xi, yi in zip(X, y):
            mean, var = m.predict(xi)
            assert abs(mean - yi) <= 1e-6
            assert var <= 1e-6 * k.signal_variance

    @pytest.mark.parametrize("kind", gp.KERNELS)
    def test_prior_recovery(self, kind, rng):
        ls = 0.05
        k = Kernel(kind, [ls, ls], 2.0)
        m = GPModel.build(k, rng.random((6, 2)), rng.normal(size=6), 1e-6)
        far = np.array([1.0 + 10 * ls * 1.01, 0.5])  # >= 10 lengthscales from every point
        mean, var = m.predict(far)
        assert abs(mean) <= 1e-6
        assert abs(var - k.signal_variance) <= 1e-6

    def test_symmetric_pair(self):
        m = GPModel.build(Kernel("matern52", [0.3], 1.0), [[0.25], [0.75]], [1.0, -1.0], 1e-8)
        mean, var, gm, gv = m.predict_with_gradients([0.5])
        assert mean == pytest.approx(0.0, abs=1e-12)
        assert gv[0] == pytest.approx(0.0, abs=1e-12)

    def test_dimension_mismatch(self):
        m = GPModel.build(Kernel("rbf", [0.3, 0.3], 1.0), [[0.1, 0.2]], [1.0], 1e-6)
        with pytest.raises(ParamDomainError):
            m.predict([0.1])
        with pytest.raises(ParamDomainError):
            m.predict_with_gradients([0.1, 0.2, 0.3])

    def test_predict_many_matches_predict(self, rng):
        m = make_random_model(rng, 3)
        X = rng.random((7, 3))
        means, vars_ = m.predict_many(X)
        for x, mu, v in zip(X, means, vars_):
            a, b = m.predict(x)
            assert mu == pytest.approx(a, rel=1e-10, abs=1e-12)
            assert v == pytest.approx(b, rel=1e-8, abs=1e-12)


class TestGradients:
    def test_against_finite_differences(self, rng):
        h = 1e-5
        for _ in range(100):
            d = int(rng.integers(1, 6))
            m = make_random_model(rng, d)
            x = rng.uniform(0.05, 0.95, d)
            _, _, gm, gv = m.predict_with_gradients(x)
            fd_mean = central_difference(lambda z: m.predict(z)[0], x, h)
            fd_var = central_difference(lambda z: m.predict(z)[1], x, h)
            np.testing.assert_allclose(gm, fd_mean, rtol=1e-4, atol=1e-7)
            np.testing.assert_allclose(gv, fd_var, rtol=1e-4, atol=1e-7)

    def test_variance_stationary_at_training_point(self, rng):
        for kind in gp.KERNELS:
            k = Kernel(kind, [0.3, 0.4], 1.0)
            X = rng.random((5, 2))
            m = GPModel.build(k, X, rng.normal(size=5), 1e-12)
            _, _, _, gv = m.predict_with_gradients(X[2])
            np.testing.assert_allclose(gv, 0.0, atol=1e-6)

    def test_agrees_with_predict_exactly(self, rng):
        for _ in range(20):
            m = make_random_model(rng, 3)
            x = rng.random(3)
            assert m.predict_with_gradients(x)[:2] == m.predict(x)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_variance_bounded(seed):
    rng = np.random.default_rng(seed)
    m = make_random_model(rng, 2, noise=float(rng.uniform(0, 0.1)))
    for x in rng.uniform(-0.5, 1.5, (10, 2)):
        _, var = m.predict(x)
        assert 0.0 <= var <= m.kernel.signal_variance + m.noise_variance + 1e-8


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_adding_points_never_increases_variance(seed):
    rng = np.random.default_rng(seed)
    k = Kernel(str(rng.choice(gp.KERNELS)), [rng.uniform(0.05, 0.5)], 1.0)
    X = rng.random(8)[:, None]
    y = rng.normal(size=8)
    tests = np.linspace(0, 1, 41)[:, None]
    prev = np.full(len(tests), np.inf)
    for n in range(1, 9):
        m = GPModel.build(k, X[:n], y[:n], 1e-10)
        var = np.array([m.predict(t)[1] for t in tests])
        assert np.all(var <= prev + 1e-9)
        prev = var


class TestFit:
    def test_improves_on_default_initialization(self):
        x = np.linspace(0, 1, 20)
        y = np.sin(2 * np.pi * x) + np.random.default_rng(0).normal(0, 1e-3, 20)
        config = GPFitConfig()
        model = gp.fit(x[:, None], y, config)
        default = GPModel.build(
            Kernel(config.kernel, [config.initial_lengthscale], float(np.mean(y * y))),
            x[:, None], y, config.initial_noise)
        assert model.log_marginal_likelihood() >= default.log_marginal_likelihood()

    def test_hyperparameters_within_bounds(self, rng):
        X = rng.random((15, 2))
        y = np.cos(3 * X[:, 0]) + X[:, 1]
        config = GPFitConfig(kernel="rbf")
        m = gp.fit(X, y, config)
        lo, hi = config.lengthscale_bounds
        assert np.all((m.kernel.lengthscales >= lo * (1 - 1e-9)) & (m.kernel.lengthscales <= hi * (1 + 1e-9)))
        assert config.noise_bounds[0] * (1 - 1e-9) <= m.noise_variance <= config.noise_bounds[1] * (1 + 1e-9)

    def test_deterministic(self, rng):
        X, y = rng.random((10, 2)), rng.normal(size=10)
        a, b = gp.fit(X, y), gp.fit(X, y)
        np.testing.assert_array_equal(a.kernel.lengthscales, b.kernel.lengthscales)
        assert a.noise_variance == b.noise_variance

    @pytest.mark.parametrize("X,y", [
        ([[0.1], [0.2]], [1.0, float("nan")]),
        ([[0.1], [float("inf")]], [1.0, 2.0]),
        (np.empty((0, 1)), []),
        ([[0.1], [0.2]], [1.0]),
    ])
    def test_bad_data(self, X, y):
        with pytest.raises(DataError):
            gp.fit(X, y)

    def test_jitter_rescues_duplicates(self):
        m = GPModel.build(Kernel("rbf", [0.3], 1.0), [[0.4], [0.4]], [1.0, 1.0], 0.0)
        assert m.jitter > 0
        assert m.predict([0.4])[0] == pytest.approx(1.0, abs=1e-6)

    def test_jitter_gives_up(self):
        with pytest.raises(NumericalError):
            gp._cholesky_with_jitter(-np.eye(3))
