import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aibo.surrogate import (FitConfig, build_model, fit, lml_and_grad, log_marginal_likelihood,
                            matern52, posterior)
from aibo.surrogate.gp import (CholeskyError, _initial_points, _log_bounds, matern52_ard,
                               psd_cholesky, robust_cholesky)

MATERN_AT_ONE = 0.523994108831820  # mpmath, 30 digits
HALF_LOG_2PI = 0.918938533204673


class TestKernel:
    def test_unit_distance_oracle(self):
        k = matern52(np.array([[0.0]]), np.array([[1.0]]), [1.0], 1.0)
        assert abs(k[0, 0] - MATERN_AT_ONE) < 1e-12

    def test_zero_distance_is_signal(self, fixed_model):
        x = fixed_model.x_train[0]
        assert matern52_ard(x, x, fixed_model) == pytest.approx(fixed_model.signal_variance, abs=1e-14)

    def test_symmetry(self, rng):
        a, b = rng.random((100, 4)), rng.random((100, 4))
        ls = rng.uniform(0.1, 2, 4)
        assert np.allclose(matern52(a, b, ls, 2.0), matern52(b, a, ls, 2.0).T, atol=0, rtol=0)

    def test_gram_is_psd(self, rng):
        x = rng.random((50, 3))
        k = matern52(x, x, [0.3, 0.5, 1.0], 1.5)
        assert np.linalg.eigvalsh(k).min() >= -1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            matern52(np.zeros((2, 3)), np.zeros((2, 2)), [1, 1, 1], 1.0)


class TestLikelihood:
    def test_single_point_oracle(self):
        # K + noise = 1 and the profiled mean equals y, so only the log-det and 2pi terms remain
        m = build_model(np.zeros((1, 1)), np.zeros(1), [1.0], 1.0 - 1e-6, 1e-6)
        assert log_marginal_likelihood(m) == pytest.approx(-HALF_LOG_2PI, abs=1e-9)

    def test_duplicate_points_survive(self):
        x = np.array([[0.2, 0.2], [0.2, 0.2], [0.8, 0.1]])
        y = np.array([1.0, 1.0, -1.0])
        a = log_marginal_likelihood(build_model(x[[0, 2]], y[[0, 2]], [0.3, 0.3], 1.0, 1e-6))
        b = log_marginal_likelihood(build_model(x, y, [0.3, 0.3], 1.0, 1e-6))
        assert np.isfinite(b) and a != b

    def test_permutation_invariance(self, rng):
        x, y = rng.random((20, 3)), rng.normal(size=20)
        perm = rng.permutation(20)
        a = log_marginal_likelihood(build_model(x, y, [0.4, 0.5, 0.6], 1.2, 1e-3))
        b = log_marginal_likelihood(build_model(x[perm], y[perm], [0.4, 0.5, 0.6], 1.2, 1e-3))
        assert abs(a - b) < 1e-9

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_matches_finite_differences(self, seed):
        r = np.random.default_rng(seed)
        d = 3
        x, y = r.random((15, d)), r.normal(size=15)
        theta = np.concatenate([np.log(r.uniform(0.2, 1.0, d)), [np.log(1.3), np.log(1e-3)]])
        _, g = lml_and_grad(theta, x, y)
        h = 1e-6
        fd = np.array([(lml_and_grad(theta + h * e, x, y)[0] - lml_and_grad(theta - h * e, x, y)[0]) / (2 * h)
                       for e in np.eye(d + 2)])
        assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-4


class TestFit:
    def test_refit_is_deterministic(self, rng):
        x, y = rng.random((20, 2)), rng.normal(size=20)
        a, b = fit(x, y, FitConfig(seed=3)), fit(x, y, FitConfig(seed=3))
        assert np.array_equal(a.log_params, b.log_params)

    def test_beats_every_restart_start(self, rng):
        x = rng.random((20, 2))
        y = np.sin(5 * x[:, 0]) + x[:, 1]
        cfg = FitConfig(seed=1)
        best = log_marginal_likelihood(fit(x, y, cfg))
        for theta in _initial_points(2, cfg, None):
            assert best >= lml_and_grad(theta, x, y)[0] - 1e-9

    def test_hyperparameters_inside_bounds(self, toy_model):
        lo, hi = np.array(_log_bounds(toy_model.dim)).T
        assert np.all(toy_model.log_params >= lo - 1e-12)
        assert np.all(toy_model.log_params <= hi + 1e-12)

    def test_sine_short_lengthscale(self):
        x = np.linspace(0, 1, 30)[:, None]
        model = fit(x, np.sin(6 * x[:, 0]))
        assert model.lengthscales[0] < 1.0

    def test_sine_interpolation_and_grid_oracle(self):
        x = np.linspace(0, 1, 30)[:, None]
        y = np.sin(6 * x[:, 0])
        model = fit(x, y)
        mu = posterior(model, x).mean
        assert np.max(np.abs(mu - y)) < 1e-2

        # brute-force grid over (lengthscale, signal, noise) of the same objective
        best = -np.inf
        for ls, sf, sn in itertools.product(np.geomspace(0.05, 5, 41), np.geomspace(0.05, 50, 31),
                                            [1e-6, 1e-5, 1e-4, 1e-3, 1e-2]):
            try:
                best = max(best, log_marginal_likelihood(build_model(x, y, [ls], sf, sn)))
            except (CholeskyError, FloatingPointError):
                continue
        assert log_marginal_likelihood(model) >= best - 1e-3

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            fit(np.zeros((3, 2)), np.zeros(4))


class TestPosterior:
    def test_interpolates_at_noise_floor(self, rng):
        x = rng.random((10, 2))
        y = rng.normal(size=10)
        m = build_model(x, y, [0.3, 0.3], 1.0, 1e-6)
        p = posterior(m, x)
        assert np.max(np.abs(p.mean - y)) < 1e-3
        assert p.variance.max() < 1e-3

    def test_reverts_to_prior_far_away(self, rng):
        x = rng.random((10, 2)) * 0.2
        m = build_model(x, rng.normal(size=10), [0.01, 0.01], 2.5, 1e-4)
        far = np.array([[1.0, 1.0]])
        assert m.kernel(m.x_train, far).max() < 1e-10
        p = posterior(m, far)
        assert abs(p.mean[0] - m.constant_mean) < 1e-6
        assert abs(p.variance[0] - m.signal_variance) < 1e-6

    def test_joint_covariance_matches_pairwise_formula(self, fixed_model, rng):
        q = rng.random((3, 2))
        p = posterior(fixed_model, q, want_cov=True)
        kinv = np.linalg.inv(fixed_model.kernel(fixed_model.x_train, fixed_model.x_train)
                             + fixed_model.noise_variance * np.eye(fixed_model.n))
        for i, j in itertools.product(range(3), repeat=2):
            ki = fixed_model.kernel(fixed_model.x_train, q[i:i + 1])[:, 0]
            kj = fixed_model.kernel(fixed_model.x_train, q[j:j + 1])[:, 0]
            brute = fixed_model.kernel(q[i:i + 1], q[j:j + 1])[0, 0] - ki @ kinv @ kj
            assert abs(p.cov[i, j] - brute) < 1e-9
        assert np.allclose(p.root @ p.root.T, p.cov, atol=1e-10)

    def test_variance_non_negative_everywhere(self, toy_model, rng):
        assert posterior(toy_model, rng.random((10_000, 3))).variance.min() >= 0.0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_observation_never_raises_variance_there(self, seed):
        r = np.random.default_rng(seed)
        x, y = r.random((8, 2)), r.normal(size=8)
        xq = r.random((1, 2))
        before = posterior(build_model(x, y, [0.3, 0.4], 1.0, 1e-4), xq).variance[0]
        after = posterior(build_model(np.vstack([x, xq]), np.append(y, 0.0), [0.3, 0.4], 1.0, 1e-4),
                          xq).variance[0]
        assert after <= before + 1e-12


def test_robust_cholesky_escalates_jitter():
    a = np.ones((3, 3))
    chol, jitter = robust_cholesky(a)
    assert jitter > 0
    assert np.allclose(chol @ chol.T, a + jitter * np.eye(3))


def test_robust_cholesky_gives_up():
    with pytest.raises(CholeskyError):
        robust_cholesky(-np.eye(2))


def test_psd_cholesky_rank_deficient():
    v = np.array([[1.0], [2.0], [1.0]])
    a = v @ v.T
    low = psd_cholesky(a)
    assert np.allclose(low @ low.T, a, atol=1e-12)
