"""Exact GP regression with a Matern-5/2 ARD kernel and constant mean.

Hyperparameters are optimized in log space. The constant mean is profiled
out in closed form, so the gradient of the log marginal likelihood with
respect to the remaining parameters needs no mean term.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from ..rng import Stream

__all__ = [
    "FitConfig", "GpModel", "Posterior", "CholeskyError",
    "matern52", "matern52_ard", "psd_cholesky", "matern52_grad_x", "robust_cholesky",
    "build_model", "fit", "log_marginal_likelihood", "lml_and_grad", "posterior",
    "LENGTHSCALE_BOUNDS", "SIGNAL_BOUNDS", "NOISE_BOUNDS", "VAR_FLOOR",
]

log = logging.getLogger(__name__)

LENGTHSCALE_BOUNDS = (0.005, 20.0)
SIGNAL_BOUNDS = (1e-3, 1e3)
NOISE_BOUNDS = (1e-6, 1e-2)
VAR_FLOOR = 1e-12

_SQRT5 = np.sqrt(5.0)
_LOG_2PI = np.log(2.0 * np.pi)


class CholeskyError(np.linalg.LinAlgError):
    pass


def robust_cholesky(a: np.ndarray, jitter: float = 1e-10, max_tries: int = 6) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``a``, escalating diagonal jitter on failure.

    Returns the factor and the jitter that was finally added (0.0 if none).
    """
    try:
        return np.linalg.cholesky(a), 0.0
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(a.shape[0])
    for _ in range(max_tries):
        try:
            return np.linalg.cholesky(a + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise CholeskyError(f"matrix not positive definite even with jitter {jitter / 10.0:.1e}")


def psd_cholesky(a: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Row-by-row lower factor of a PSD matrix; degenerate pivots become 0.

    Row ``i`` depends only on the leading ``i + 1`` rows of ``a``, so the
    factor of a leading block is the leading block of the factor.
    """
    n = a.shape[0]
    low = np.zeros_like(a, dtype=float)
    for i in range(n):
        for j in range(i):
            if low[j, j] > 0.0:
                low[i, j] = (a[i, j] - low[i, :j] @ low[j, :j]) / low[j, j]
        piv = a[i, i] - low[i, :i] @ low[i, :i]
        low[i, i] = np.sqrt(piv) if piv > rtol * max(a[i, i], VAR_FLOOR) else 0.0
    return low


def _scaled_dist(x1: np.ndarray, x2: np.ndarray, lengthscales: np.ndarray) -> np.ndarray:
    z1 = x1 / lengthscales
    z2 = x2 / lengthscales
    sq = np.sum(z1**2, axis=1)[:, None] + np.sum(z2**2, axis=1)[None, :] - 2.0 * z1 @ z2.T
    return np.sqrt(np.maximum(sq, 0.0))


def matern52(x1, x2, lengthscales, signal_variance) -> np.ndarray:
    """Kernel matrix between the rows of ``x1`` and ``x2``."""
    x1 = np.atleast_2d(np.asarray(x1, dtype=float))
    x2 = np.atleast_2d(np.asarray(x2, dtype=float))
    lengthscales = np.asarray(lengthscales, dtype=float)
    if x1.shape[1] != lengthscales.size or x2.shape[1] != lengthscales.size:
        raise ValueError(f"dimension mismatch: {x1.shape[1]}, {x2.shape[1]} vs {lengthscales.size} lengthscales")
    r = _scaled_dist(x1, x2, lengthscales)
    return signal_variance * (1.0 + _SQRT5 * r + 5.0 / 3.0 * r**2) * np.exp(-_SQRT5 * r)


def matern52_grad_x(x, xs, lengthscales, signal_variance) -> np.ndarray:
    """Gradient of ``k(x, xs[i])`` with respect to ``x``.

    ``x`` may be a single point ``(d,)`` giving ``(m, d)``, or a batch
    ``(b, d)`` giving ``(b, m, d)``.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    diff = xb[:, None, :] - xs[None, :, :]
    r = np.sqrt(np.sum((diff / lengthscales) ** 2, axis=-1))
    coef = -5.0 / 3.0 * signal_variance * (1.0 + _SQRT5 * r) * np.exp(-_SQRT5 * r)
    g = coef[..., None] * diff / lengthscales**2
    return g[0] if single else g


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 5
    max_iters: int = 100
    tol: float = 1e-6
    seed: int = 0


@dataclass(frozen=True, eq=False)
class GpModel:
    x_train: np.ndarray
    y_train: np.ndarray
    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float
    constant_mean: float
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0

    @property
    def dim(self) -> int:
        return self.x_train.shape[1]

    @property
    def n(self) -> int:
        return self.x_train.shape[0]

    @property
    def log_params(self) -> np.ndarray:
        return np.concatenate([np.log(self.lengthscales),
                               [np.log(self.signal_variance), np.log(self.noise_variance)]])

    def kernel(self, x1, x2) -> np.ndarray:
        return matern52(x1, x2, self.lengthscales, self.signal_variance)

    def solve_lower(self, b: np.ndarray) -> np.ndarray:
        return linalg.solve_triangular(self.chol, b, lower=True, check_finite=False)

    def solve(self, b: np.ndarray) -> np.ndarray:
        return linalg.cho_solve((self.chol, True), b, check_finite=False)


@dataclass(frozen=True, eq=False)
class Posterior:
    mean: np.ndarray
    cov: np.ndarray
    root: np.ndarray | None = None

    @property
    def variance(self) -> np.ndarray:
        return np.maximum(np.diag(self.cov), VAR_FLOOR)


def matern52_ard(x1, x2, model: GpModel) -> float:
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != (model.dim,) or x2.shape != (model.dim,):
        raise ValueError(f"points must have shape ({model.dim},)")
    return float(model.kernel(x1[None], x2[None])[0, 0])


def _split(theta: np.ndarray, d: int):
    return np.exp(theta[:d]), float(np.exp(theta[d])), float(np.exp(theta[d + 1]))


def build_model(x, y, lengthscales, signal_variance, noise_variance) -> GpModel:
    """Factorize the training covariance and profile the constant mean."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ls = np.asarray(lengthscales, dtype=float)
    k = matern52(x, x, ls, signal_variance)
    k[np.diag_indices_from(k)] += noise_variance
    chol, jitter = robust_cholesky(k)
    ones = np.ones_like(y)
    kinv_1 = linalg.cho_solve((chol, True), ones, check_finite=False)
    kinv_y = linalg.cho_solve((chol, True), y, check_finite=False)
    mean = float(kinv_1 @ y / (ones @ kinv_1))
    alpha = kinv_y - mean * kinv_1
    return GpModel(x, y, ls, float(signal_variance), float(noise_variance), mean, chol, alpha, jitter)


def log_marginal_likelihood(model: GpModel) -> float:
    resid = model.y_train - model.constant_mean
    value = (-0.5 * resid @ model.alpha - np.sum(np.log(np.diag(model.chol)))
             - 0.5 * model.n * _LOG_2PI)
    if not np.isfinite(value):
        raise FloatingPointError("non-finite log marginal likelihood")
    return float(value)


def lml_and_grad(theta, x, y) -> tuple[float, np.ndarray]:
    """Profiled LML and its gradient in ``(log ls..., log signal, log noise)``."""
    theta = np.asarray(theta, dtype=float)
    d = x.shape[1]
    ls, sf, sn = _split(theta, d)
    z = x / ls
    sq = np.sum(z**2, axis=1)[:, None] + np.sum(z**2, axis=1)[None, :] - 2.0 * z @ z.T
    r = np.sqrt(np.maximum(sq, 0.0))
    e = np.exp(-_SQRT5 * r)
    kf = sf * (1.0 + _SQRT5 * r + 5.0 / 3.0 * r**2) * e
    k = kf.copy()
    k[np.diag_indices_from(k)] += sn
    chol, _ = robust_cholesky(k)
    ones = np.ones_like(y)
    kinv_1 = linalg.cho_solve((chol, True), ones, check_finite=False)
    kinv_y = linalg.cho_solve((chol, True), y, check_finite=False)
    mean = kinv_1 @ y / (ones @ kinv_1)
    alpha = kinv_y - mean * kinv_1
    n = y.size
    lml = -0.5 * (y - mean) @ alpha - np.sum(np.log(np.diag(chol))) - 0.5 * n * _LOG_2PI

    kinv, info = linalg.lapack.dpotri(chol, lower=1)
    if info != 0:
        raise CholeskyError("dpotri failed")
    kinv = np.tril(kinv) + np.tril(kinv, -1).T
    a = np.outer(alpha, alpha) - kinv

    grad = np.empty(d + 2)
    m = a * (5.0 / 3.0 * sf * (1.0 + _SQRT5 * r) * e)
    rows = m.sum(axis=1)
    grad[:d] = z.T**2 @ rows - np.einsum("aj,aj->j", z, m @ z)
    grad[d] = 0.5 * np.sum(a * kf)
    grad[d + 1] = 0.5 * sn * np.trace(a)
    return float(lml), grad


def _log_bounds(d: int) -> list[tuple[float, float]]:
    return ([tuple(np.log(LENGTHSCALE_BOUNDS))] * d
            + [tuple(np.log(SIGNAL_BOUNDS)), tuple(np.log(NOISE_BOUNDS))])


def default_log_params(d: int) -> np.ndarray:
    ls = np.clip(0.5 * np.sqrt(d), *LENGTHSCALE_BOUNDS)
    return np.concatenate([np.full(d, np.log(ls)), [0.0, np.log(1e-3)]])


def _initial_points(d: int, config: FitConfig, warm_start) -> list[np.ndarray]:
    bounds = np.array(_log_bounds(d))
    base = default_log_params(d) if warm_start is None else np.asarray(warm_start, dtype=float)
    inits = [np.clip(base, bounds[:, 0], bounds[:, 1])]
    rng = Stream(config.seed).split("gp-fit-restarts")
    for _ in range(1, config.restarts):
        t = default_log_params(d)
        t[:d] += rng.normal(d)
        t[d] = np.log(10.0) * (2.0 * rng.uniform() - 1.0)
        t[d + 1] = rng.uniform(low=np.log(NOISE_BOUNDS[0]), high=np.log(NOISE_BOUNDS[1]))
        inits.append(np.clip(t, bounds[:, 0], bounds[:, 1]))
    return inits


def fit(x, y, config: FitConfig = FitConfig(), warm_start=None) -> GpModel:
    """Fit hyperparameters by multi-restart bounded LML maximization.

    Restart 0 starts from ``warm_start`` (log parameters) when given,
    otherwise from a fixed default; the remaining restarts are seeded
    perturbations. The best restart wins, lowest index on ties.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[0] < 2 or x.shape[0] != y.size:
        raise ValueError("need at least two training points with matching targets")
    d = x.shape[1]
    bounds = _log_bounds(d)

    def neg(theta):
        v, g = lml_and_grad(theta, x, y)
        return -v, -g

    best_theta, best_val = None, -np.inf
    last_err = None
    for i, t0 in enumerate(_initial_points(d, config, warm_start)):
        try:
            v0 = lml_and_grad(t0, x, y)[0]
            res = optimize.minimize(neg, t0, jac=True, method="L-BFGS-B", bounds=bounds,
                                    options={"maxiter": config.max_iters, "ftol": config.tol * 1e-3})
        except CholeskyError as err:
            log.debug("restart %d failed: %s", i, err)
            last_err = err
            continue
        theta, val = (res.x, -res.fun) if -res.fun >= v0 else (t0, v0)
        if np.isfinite(val) and val > best_val:
            best_theta, best_val = theta, val
    if best_theta is None:
        raise CholeskyError(f"all restarts failed: {last_err}")
    ls, sf, sn = _split(best_theta, d)
    return build_model(x, y, ls, sf, sn)


def posterior(model: GpModel, query, want_cov: bool = False) -> Posterior:
    q = np.atleast_2d(np.asarray(query, dtype=float))
    if q.shape[1] != model.dim:
        raise ValueError(f"query has dimension {q.shape[1]}, model has {model.dim}")
    ks = model.kernel(model.x_train, q)
    v = model.solve_lower(ks)
    mean = model.constant_mean + ks.T @ model.alpha
    if not want_cov:
        var = np.maximum(model.signal_variance - np.sum(v**2, axis=0), VAR_FLOOR)
        return Posterior(mean, np.diag(var))
    cov = model.kernel(q, q) - v.T @ v
    cov = 0.5 * (cov + cov.T)
    idx = np.diag_indices_from(cov)
    cov[idx] = np.maximum(cov[idx], VAR_FLOOR)
    return Posterior(mean, cov, psd_cholesky(cov))
