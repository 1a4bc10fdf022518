"""Acquisition maximization from a set of start points.

An acquisition here is any object with ``value(X)`` and
``value_and_grad(X)`` over ``(m, d)`` batches of unit-cube points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .heuristics import CmaEs
from .rng import Stream

__all__ = ["MaximizerConfig", "Candidate", "top_n_select", "ascend", "ascend_batch",
           "multi_start_maximize", "es_maximize", "batched_values"]


@dataclass(frozen=True)
class MaximizerConfig:
    max_iters: int = 50
    step_tol: float = 1e-6
    gradient: str = "analytic"
    starts: int = 1
    armijo: float = 1e-4
    init_step: float = 0.1
    fd_step: float = 1e-5

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.gradient not in ("analytic", "finite_difference"):
            raise ValueError(f"unknown gradient mode {self.gradient!r}")


@dataclass(frozen=True, eq=False)
class Candidate:
    point: np.ndarray
    af_value: float
    origin: str = ""


def batched_values(af, x: np.ndarray, chunk: int = 1024) -> np.ndarray:
    x = np.atleast_2d(x)
    return np.concatenate([af.value(x[i:i + chunk]) for i in range(0, len(x), chunk)])


def top_n_select(raw: np.ndarray, af, n: int) -> tuple[np.ndarray, np.ndarray]:
    """The ``n`` rows of ``raw`` with the highest acquisition, best first.

    Ties keep the lower input index. Returns ``(points, values)``.
    """
    raw = np.atleast_2d(raw)
    if n < 1 or n > len(raw):
        raise ValueError(f"cannot select top {n} of {len(raw)} points")
    vals = batched_values(af, raw)
    order = np.argsort(-vals, kind="stable")[:n]
    return raw[order], vals[order]


def _value_and_grad(af, x: np.ndarray, config: MaximizerConfig):
    if config.gradient == "analytic":
        return af.value_and_grad(x)
    m, d = x.shape
    h = config.fd_step
    shifts = np.concatenate([np.eye(d), -np.eye(d)]) * h
    probe = (x[:, None, :] + shifts[None]).reshape(-1, d)
    pv = af.value(probe).reshape(m, 2 * d)
    return af.value(x), (pv[:, :d] - pv[:, d:]) / (2.0 * h)


def ascend_batch(starts: np.ndarray, af, config: MaximizerConfig = MaximizerConfig()):
    """Projected gradient ascent with Armijo backtracking, run per start.

    Each start keeps its own step length: it doubles after an accepted step
    and halves after a rejected one. A start stops after ``max_iters``
    accepted steps or once its trial displacement drops below ``step_tol``.
    Returns ``(points, values)``.
    """
    x = np.clip(np.atleast_2d(np.asarray(starts, dtype=float)), 0.0, 1.0)
    f, g = _value_and_grad(af, x, config)
    if not np.all(np.isfinite(f)):
        raise FloatingPointError("acquisition is not finite at a start point")
    m = len(x)
    gnorm = np.linalg.norm(g, axis=1)
    t = np.where(gnorm > 0, config.init_step / np.where(gnorm > 0, gnorm, 1.0), 0.0)
    active = gnorm > 0
    iters = np.zeros(m, dtype=int)
    rounds = 0
    while active.any() and rounds < 4 * config.max_iters:
        rounds += 1
        idx = np.flatnonzero(active)
        trial = np.clip(x[idx] + t[idx, None] * g[idx], 0.0, 1.0)
        disp = trial - x[idx]
        small = np.linalg.norm(disp, axis=1) < config.step_tol
        active[idx[small]] = False
        idx, trial, disp = idx[~small], trial[~small], disp[~small]
        if idx.size == 0:
            break
        ft, gt = _value_and_grad(af, trial, config)
        ok = np.isfinite(ft) & (ft >= f[idx] + config.armijo * np.sum(g[idx] * disp, axis=1))
        acc, rej = idx[ok], idx[~ok]
        x[acc], f[acc], g[acc] = trial[ok], ft[ok], gt[ok]
        t[acc] *= 2.0
        t[rej] *= 0.5
        iters[acc] += 1
        active[acc[iters[acc] >= config.max_iters]] = False
    return x, f


def ascend(start, af, config: MaximizerConfig = MaximizerConfig(), origin: str = "") -> Candidate:
    x, f = ascend_batch(np.asarray(start, dtype=float)[None], af, config)
    return Candidate(x[0], float(f[0]), origin)


def multi_start_maximize(inits, af, config: MaximizerConfig = MaximizerConfig(),
                         origin: str = "") -> Candidate:
    """Ascend from every init and keep the best end point (lowest index on ties)."""
    inits = np.atleast_2d(np.asarray(inits, dtype=float))
    if len(inits) < 1:
        raise ValueError("need at least one start point")
    x, f = ascend_batch(inits, af, config)
    best = int(np.argmax(f))
    return Candidate(x[best], float(f[best]), origin)


def es_maximize(start, af, rng: Stream, *, generations: int = 50, popsize: int = 20,
                sigma0: float = 0.2, origin: str = "") -> Candidate:
    """Maximize the acquisition directly with CMA-ES started at ``start``.

    The best point ever evaluated (the start included) is returned.
    """
    start = np.asarray(start, dtype=float)
    best_x = start.copy()
    best_f = float(af.value(start[None])[0])
    es = CmaEs(start, sigma0)
    for gen in range(generations):
        pop = es.ask(popsize, rng.split(f"gen-{gen}"))
        vals = batched_values(af, pop)
        i = int(np.argmax(vals))
        if vals[i] > best_f:
            best_x, best_f = pop[i].copy(), float(vals[i])
        es.tell(pop, -vals)
    return Candidate(best_x, best_f, origin)
