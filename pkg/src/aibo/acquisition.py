"""Analytic and Monte-Carlo acquisition functions (minimization convention).

Every acquisition is maximized. Values live on the GP's transformed target
scale. Monte-Carlo estimators use a fixed bank of standard-normal base
samples, so within one maximization episode the surface is deterministic
and differentiable almost everywhere.

For batches the candidate point is appended after the pending points, and
the joint root is ordered accordingly. Sample ``i`` of the candidate is
``mu_x + l . eps_i[:j] + s * eps_i[j]``, where ``l`` and ``s`` form the last
row of the Cholesky factor of the joint covariance. Pending samples do not
depend on the candidate, which makes the greedy batch value non-decreasing
in the number of slots.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg
from scipy.special import ndtr

from .surrogate import VAR_FLOOR, GpModel, Posterior, psd_cholesky
from .surrogate.gp import matern52_grad_x

__all__ = ["AcquisitionSpec", "AfEvaluation", "AcquisitionFunction", "KINDS",
           "ucb", "ei_analytic", "mc_af_value", "greedy_sequential_batch"]

KINDS = ("ucb_analytic", "ei_analytic", "ucb_mc", "ei_mc")

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
# relative pivot tolerance shared with surrogate.psd_cholesky
_PIVOT_RTOL = 1e-10


def ucb(mu, sigma, beta):
    return -np.asarray(mu) + np.sqrt(beta) * np.asarray(sigma)


def _pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def ei_analytic(mu, sigma, incumbent):
    """Expected improvement below ``incumbent``."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    imp = incumbent - mu
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = np.where(sigma > 0, imp / np.where(sigma > 0, sigma, 1.0), 0.0)
        out = np.where(sigma > 0, imp * ndtr(z) + sigma * _pdf(z), np.maximum(imp, 0.0))
    return np.maximum(out, 0.0) if out.ndim else float(max(out, 0.0))


@dataclass(frozen=True, eq=False)
class AcquisitionSpec:
    kind: str = "ucb_mc"
    beta: float = 1.96
    mc_samples: int = 128
    base_samples: np.ndarray | None = None
    pending: np.ndarray | None = None
    incumbent: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown acquisition kind {self.kind!r}")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        if self.pending is None:
            object.__setattr__(self, "pending", np.empty((0, 0)))

    @property
    def n_pending(self) -> int:
        return self.pending.shape[0]

    @property
    def is_mc(self) -> bool:
        return self.kind.endswith("_mc")

    @property
    def is_ucb(self) -> bool:
        return self.kind.startswith("ucb")

    def eps(self, q: int) -> np.ndarray:
        if self.base_samples is None:
            raise ValueError("Monte-Carlo acquisition needs base samples")
        if self.base_samples.shape[0] < self.mc_samples or self.base_samples.shape[1] < q:
            raise ValueError(f"base sample bank {self.base_samples.shape} too small for "
                             f"{self.mc_samples} samples x {q} points")
        return self.base_samples[: self.mc_samples, :q]

    def with_pending(self, pending) -> AcquisitionSpec:
        return replace(self, pending=np.atleast_2d(np.asarray(pending, dtype=float)))

    def with_samples(self, mc_samples: int) -> AcquisitionSpec:
        return replace(self, mc_samples=mc_samples)


@dataclass(frozen=True)
class AfEvaluation:
    value: float
    gradient: np.ndarray | None = None


def mc_af_value(post: Posterior, spec: AcquisitionSpec) -> float:
    """Acquisition of a joint posterior over ``pending + [x]`` from its root.

    This is the direct estimator; ``AcquisitionFunction`` computes the same
    quantity incrementally and with gradients.
    """
    if post.root is None:
        raise ValueError("posterior root factor is required")
    q = post.mean.size
    if spec.is_ucb and q == 1:
        return float(ucb(post.mean[0], np.sqrt(max(post.cov[0, 0], VAR_FLOOR)), spec.beta))
    if not spec.is_mc:
        if q != 1:
            raise ValueError("analytic acquisitions take a single point")
        return float(ei_analytic(post.mean[0], np.sqrt(max(post.cov[0, 0], VAR_FLOOR)), spec.incumbent))
    dev = spec.eps(q) @ post.root.T
    if spec.is_ucb:
        c = np.sqrt(spec.beta * np.pi / 2.0)
        per = -post.mean + c * np.abs(dev)
        return float(np.mean(np.max(per, axis=1)))
    imp = spec.incumbent - (post.mean + dev)
    return float(np.mean(np.maximum(np.max(imp, axis=1), 0.0)))


def _forward_sub(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``low @ out[i] = b[i]`` for each row; zero pivots give zero."""
    out = np.zeros_like(b)
    for k in range(low.shape[0]):
        if low[k, k] > 0.0:
            acc = b[:, k] - out[:, :k] @ low[k, :k]
            out[:, k] = acc / low[k, k]
    return out


class AcquisitionFunction:
    """Acquisition surface for one maximization episode.

    Parameters are frozen at construction: model, pending points and the
    base-sample bank. ``value`` and ``value_and_grad`` take an ``(m, d)``
    batch of unit-cube points.
    """

    def __init__(self, model: GpModel, spec: AcquisitionSpec):
        self.model = model
        self.spec = spec
        j = spec.n_pending
        self.n_pending = j
        if j and not spec.is_mc:
            raise ValueError("analytic acquisitions cannot condition on pending points")
        if spec.is_mc and not (spec.is_ucb and j == 0):
            self.eps = spec.eps(j + 1)
        else:
            self.eps = None
        if j:
            p = spec.pending
            kp = model.kernel(model.x_train, p)
            self._v_p = model.solve_lower(kp)
            self._kinv_kp = model.solve(kp)
            self._mu_p = model.constant_mean + kp.T @ model.alpha
            cov = model.kernel(p, p) - kp.T @ self._kinv_kp
            cov = 0.5 * (cov + cov.T)
            idx = np.diag_indices_from(cov)
            cov[idx] = np.maximum(cov[idx], VAR_FLOOR)
            self._root_p = psd_cholesky(cov)
            dev_p = self.eps[:, :j] @ self._root_p.T
            if spec.is_ucb:
                c = np.sqrt(spec.beta * np.pi / 2.0)
                self._best_p = np.max(-self._mu_p + c * np.abs(dev_p), axis=1)
            else:
                imp = spec.incumbent - (self._mu_p + dev_p)
                self._best_p = np.maximum(np.max(imp, axis=1), 0.0)
        elif self.eps is not None and not spec.is_ucb:
            self._best_p = np.zeros(self.eps.shape[0])

    def __call__(self, x) -> np.ndarray:
        return self.value(x)

    def _moments(self, x: np.ndarray, grad: bool):
        m = self.model
        ks = m.kernel(x, m.x_train)
        mu = m.constant_mean + ks @ m.alpha
        v = m.solve_lower(ks.T)
        var_raw = m.signal_variance - np.sum(v**2, axis=0)
        out = {"mu": mu, "var": np.maximum(var_raw, VAR_FLOOR)}
        if grad:
            kinv_ks = linalg.solve_triangular(m.chol, v, lower=True, trans="T", check_finite=False)
            dks = matern52_grad_x(x, m.x_train, m.lengthscales, m.signal_variance)
            out["dmu"] = np.einsum("mnd,n->md", dks, m.alpha)
            out["dvar"] = np.where((var_raw > VAR_FLOOR)[:, None],
                                   -2.0 * np.einsum("mnd,nm->md", dks, kinv_ks), 0.0)
            out["dks"] = dks
        if self.n_pending:
            p = self.spec.pending
            c = m.kernel(x, p) - v.T @ self._v_p
            l = _forward_sub(self._root_p, c)
            s2 = out["var"] - np.sum(l**2, axis=1)
            live = s2 > _PIVOT_RTOL * out["var"]
            s = np.where(live, np.sqrt(np.where(live, s2, 1.0)), 0.0)
            out.update(l=l, s=s, live=live)
            if grad:
                dkp = matern52_grad_x(x, p, m.lengthscales, m.signal_variance)
                dc = dkp - np.einsum("mnd,nj->mjd", out["dks"], self._kinv_kp)
                # forward substitution, one gradient coordinate at a time
                dl = np.zeros_like(dc)
                root = self._root_p
                for k in range(root.shape[0]):
                    if root[k, k] > 0.0:
                        acc = dc[:, k, :] - np.einsum("mkd,k->md", dl[:, :k, :], root[k, :k])
                        dl[:, k, :] = acc / root[k, k]
                ds_num = 0.5 * out["dvar"] - np.einsum("mj,mjd->md", l, dl)
                ds = np.where(live[:, None], ds_num / np.where(s > 0, s, 1.0)[:, None], 0.0)
                out.update(dl=dl, ds=ds)
        else:
            s = np.sqrt(out["var"])
            out["s"] = s
            if grad:
                out["ds"] = out["dvar"] / (2.0 * s[:, None])
        return out

    def _evaluate(self, x, grad: bool):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.model.dim:
            raise ValueError(f"points have dimension {x.shape[1]}, model has {self.model.dim}")
        spec = self.spec
        mo = self._moments(x, grad)
        mu, s = mo["mu"], mo["s"]
        j = self.n_pending

        if self.eps is None:
            if spec.is_ucb:
                val = ucb(mu, s, spec.beta)
                g = -mo["dmu"] + np.sqrt(spec.beta) * mo["ds"] if grad else None
            else:
                val = ei_analytic(mu, s, spec.incumbent)
                if grad:
                    z = (spec.incumbent - mu) / s
                    g = -ndtr(z)[:, None] * mo["dmu"] + _pdf(z)[:, None] * mo["ds"]
                else:
                    g = None
            return np.atleast_1d(val), g

        eps = self.eps
        dev = s[:, None] * eps[None, :, j]
        if j:
            dev = dev + mo["l"] @ eps[:, :j].T
        if spec.is_ucb:
            c = np.sqrt(spec.beta * np.pi / 2.0)
            cand = -mu[:, None] + c * np.abs(dev)
        else:
            cand = spec.incumbent - (mu[:, None] + dev)
        best = self._best_p[None, :]
        wins = cand > best
        val = np.mean(np.where(wins, cand, best), axis=1)
        if not grad:
            return val, None
        ddev = mo["ds"][:, None, :] * eps[None, :, j, None]
        if j:
            ddev = ddev + np.einsum("nj,mjd->mnd", eps[:, :j], mo["dl"])
        if spec.is_ucb:
            dcand = -mo["dmu"][:, None, :] + c * np.sign(dev)[..., None] * ddev
        else:
            dcand = -(mo["dmu"][:, None, :] + ddev)
        g = np.einsum("mn,mnd->md", wins.astype(float), dcand) / eps.shape[0]
        return val, g

    def value(self, x) -> np.ndarray:
        return self._evaluate(x, grad=False)[0]

    def value_and_grad(self, x) -> tuple[np.ndarray, np.ndarray]:
        return self._evaluate(x, grad=True)

    def evaluate(self, x, want_grad: bool = False) -> AfEvaluation:
        """Single-point convenience wrapper."""
        v, g = self._evaluate(np.asarray(x, dtype=float)[None], grad=want_grad)
        return AfEvaluation(float(v[0]), None if g is None else g[0])

    def moments(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Marginal posterior mean and variance at a batch of points."""
        mo = self._moments(np.atleast_2d(np.asarray(x, dtype=float)), grad=False)
        return mo["mu"], mo["var"]


def greedy_sequential_batch(model: GpModel, spec: AcquisitionSpec, q: int, propose) -> np.ndarray:
    """Build a ``q``-point batch one slot at a time.

    ``propose(spec_j, j)`` maximizes the acquisition conditioned on the
    points already chosen (carried in ``spec_j.pending``) and returns the
    next unit-cube point.
    """
    if q < 1:
        raise ValueError("batch size must be >= 1")
    chosen: list[np.ndarray] = []
    for j in range(q):
        spec_j = spec.with_pending(np.array(chosen)) if chosen else spec
        chosen.append(np.asarray(propose(spec_j, j), dtype=float))
    return np.array(chosen)
