"""Ask/tell heuristics that propose raw candidates in the unit cube.

``ask`` draws from the strategy's current state using a caller-supplied
random stream and never mutates the strategy; ``tell`` feeds back evaluated
points (raw objective values, lower is better) and is the only mutator.
Everything is clamped to ``[0, 1]^d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Stream

__all__ = [
    "CmaParams", "CmaEs", "GeneticAlgorithm", "RandomSearch", "GaussianSpray",
    "expected_norm", "expected_norm_exact", "random_ask", "gaussian_spray_ask",
    "tournament_select", "sbx_crossover", "polynomial_mutation", "make_strategy",
    "STRATEGY_KINDS",
]

STRATEGY_KINDS = ("cmaes", "ga", "random", "gaussian_spray")


def expected_norm(n: int) -> float:
    """Series approximation of E||N(0, I_n)||."""
    return math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))


def expected_norm_exact(n: int) -> float:
    return math.sqrt(2.0) * math.exp(math.lgamma((n + 1) / 2.0) - math.lgamma(n / 2.0))


def _as_batch(x, y, dim: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape[1] != dim or x.shape[0] != y.size:
        raise ValueError(f"expected {y.size} points of dimension {dim}, got {x.shape}")
    return x, y


# --------------------------------------------------------------------- CMA-ES


@dataclass(frozen=True)
class CmaParams:
    """Strategy constants for one generation size ``lam`` in dimension ``n``."""

    n: int
    lam: int
    mu: int
    weights: np.ndarray
    mu_w: float
    c_sigma: float
    d_sigma: float
    c_c: float
    c_1: float
    c_mu: float
    alpha: float = 1.5

    @classmethod
    def default(cls, n: int, lam: int) -> CmaParams:
        if lam < 2:
            raise ValueError("a generation needs at least two points")
        mu = lam // 2
        w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        w = w / w.sum()
        mu_w = 1.0 / float(np.sum(w**2))
        c_sigma = (mu_w + 2.0) / (n + mu_w + 5.0)
        d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_w - 1.0) / (n + 1.0)) - 1.0) + c_sigma
        c_c = (4.0 + mu_w / n) / (n + 4.0 + 2.0 * mu_w / n)
        c_1 = 2.0 / ((n + 1.3) ** 2 + mu_w)
        c_mu = min(1.0 - c_1, 2.0 * (mu_w - 2.0 + 1.0 / mu_w) / ((n + 2.0) ** 2 + mu_w))
        return cls(n, lam, mu, w, mu_w, c_sigma, d_sigma, c_c, c_1, c_mu)


def default_popsize(n: int) -> int:
    return 4 + int(3 * math.log(n))


@dataclass(eq=False)
class CmaEs:
    """CMA-ES over the unit cube with generation buffering.

    A generation update fires when a tell brings at least 4 points (one
    generation per BO batch), or once ``default_popsize(n)`` smaller tells
    have accumulated.
    """

    mean: np.ndarray
    sigma: float = 0.2
    cov: np.ndarray | None = None
    path_sigma: np.ndarray | None = None
    path_c: np.ndarray | None = None
    buffer_x: list = field(default_factory=list)
    buffer_y: list = field(default_factory=list)
    generations: int = 0
    kind: str = "cmaes"

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).copy()
        n = self.mean.size
        if self.cov is None:
            self.cov = np.eye(n)
        if self.path_sigma is None:
            self.path_sigma = np.zeros(n)
        if self.path_c is None:
            self.path_c = np.zeros(n)
        self._refresh_eigen()

    @classmethod
    def from_data(cls, x_unit, y, sigma0: float = 0.2) -> CmaEs:
        """Start at the best evaluated point with ``C = I`` and zero paths."""
        x_unit = np.atleast_2d(np.asarray(x_unit, dtype=float))
        y = np.asarray(y, dtype=float)
        if y.size == 0:
            raise ValueError("CMA-ES needs at least one evaluated point")
        if not sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        return cls(x_unit[int(np.argmin(y))], sigma0)

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def lam_default(self) -> int:
        return default_popsize(self.dim)

    def _refresh_eigen(self):
        evals, evecs = np.linalg.eigh(self.cov)
        evals = np.maximum(evals, 1e-20)
        self._evecs = evecs
        self._sqrt_evals = np.sqrt(evals)

    def inv_sqrt_cov(self) -> np.ndarray:
        return (self._evecs / self._sqrt_evals) @ self._evecs.T

    def ask(self, k: int, rng: Stream) -> np.ndarray:
        z = rng.normal((k, self.dim))
        x = self.mean + self.sigma * (z * self._sqrt_evals) @ self._evecs.T
        return np.clip(x, 0.0, 1.0)

    def tell(self, x, y) -> None:
        x, y = _as_batch(x, y, self.dim)
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
            raise ValueError("CMA-ES cannot be told non-finite values")
        self.buffer_x.extend(x)
        self.buffer_y.extend(y)
        if len(y) >= 4 or len(self.buffer_y) >= self.lam_default:
            self._update()

    def _update(self) -> None:
        xs = np.array(self.buffer_x)
        ys = np.array(self.buffer_y)
        self.buffer_x, self.buffer_y = [], []
        if len(ys) < 2:
            return
        p = CmaParams.default(self.dim, len(ys))
        n = self.dim
        order = np.argsort(ys, kind="stable")[: p.mu]
        steps = (xs[order] - self.mean) / self.sigma
        disp = p.weights @ steps
        old_mean = self.mean
        self.mean = old_mean + self.sigma * disp

        cs = p.c_sigma
        self.path_sigma = ((1.0 - cs) * self.path_sigma
                           + math.sqrt(cs * (2.0 - cs) * p.mu_w) * self.inv_sqrt_cov() @ disp)
        norm_ps = float(np.linalg.norm(self.path_sigma))
        h = 1.0 if norm_ps <= p.alpha * math.sqrt(n) else 0.0
        cc = p.c_c
        self.path_c = (1.0 - cc) * self.path_c + h * math.sqrt(cc * (2.0 - cc) * p.mu_w) * disp
        c_s = (1.0 - h**2) * p.c_1 * cc * (2.0 - cc)
        rank_mu = (steps.T * p.weights) @ steps
        cov = ((1.0 - p.c_1 - p.c_mu + c_s) * self.cov
               + p.c_1 * np.outer(self.path_c, self.path_c) + p.c_mu * rank_mu)
        self.cov = 0.5 * (cov + cov.T)
        self.sigma *= math.exp((cs / p.d_sigma) * (norm_ps / expected_norm(n) - 1.0))
        self.generations += 1
        self._refresh_eigen()


# ------------------------------------------------------------------------ GA


def tournament_select(fitness: np.ndarray, count: int, rng: Stream) -> np.ndarray:
    """Indices of ``count`` binary-tournament winners (lower fitness wins).

    Each tournament draws two distinct individuals; on equal fitness the
    first drawn wins.
    """
    size = fitness.size
    if size < 2:
        return np.zeros(count, dtype=int)
    a = rng.integers(0, size, count)
    b = rng.integers(0, size - 1, count)
    b = b + (b >= a)
    return np.where(fitness[b] < fitness[a], b, a)


def sbx_crossover(p1: np.ndarray, p2: np.ndarray, rng: Stream, *, prob: float = 0.5,
                  prob_var: float = 0.5, eta: float = 15.0) -> tuple[np.ndarray, np.ndarray]:
    """Bounded simulated binary crossover of row-paired parents in [0, 1]."""
    m, d = p1.shape
    c1, c2 = p1.copy(), p2.copy()
    do_pair = rng.uniform(m) < prob
    do_var = (rng.uniform((m, d)) < prob_var) & do_pair[:, None]
    do_var &= np.abs(p1 - p2) > 1e-14
    u = rng.uniform((m, d))
    swap = rng.uniform((m, d)) < 0.5
    if not do_var.any():
        return c1, c2

    y1 = np.minimum(p1, p2)
    y2 = np.maximum(p1, p2)
    delta = np.where(do_var, y2 - y1, 1.0)

    def betaq(beta):
        alpha = 2.0 - np.power(beta, -(eta + 1.0))
        low = u <= 1.0 / alpha
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(low, np.power(u * alpha, 1.0 / (eta + 1.0)),
                           np.power(1.0 / np.maximum(2.0 - u * alpha, 1e-300), 1.0 / (eta + 1.0)))
        return out

    b1 = betaq(1.0 + 2.0 * y1 / delta)
    b2 = betaq(1.0 + 2.0 * (1.0 - y2) / delta)
    k1 = np.clip(0.5 * ((y1 + y2) - b1 * delta), 0.0, 1.0)
    k2 = np.clip(0.5 * ((y1 + y2) + b2 * delta), 0.0, 1.0)
    k1, k2 = np.where(swap, k2, k1), np.where(swap, k1, k2)
    c1 = np.where(do_var, k1, c1)
    c2 = np.where(do_var, k2, c2)
    return c1, c2


def polynomial_mutation(x: np.ndarray, rng: Stream, *, prob: float = 0.9,
                        prob_var: float | None = None, eta: float = 20.0) -> np.ndarray:
    """Bounded polynomial mutation in [0, 1]; ``prob`` is per individual."""
    m, d = x.shape
    if prob_var is None:
        prob_var = min(0.5, 1.0 / d)
    do_ind = rng.uniform(m) < prob
    mask = (rng.uniform((m, d)) < prob_var) & do_ind[:, None]
    u = rng.uniform((m, d))
    if not mask.any():
        return x.copy()
    d1, d2 = x, 1.0 - x
    power = 1.0 / (eta + 1.0)
    lo = u <= 0.5
    val_lo = 2.0 * u + (1.0 - 2.0 * u) * np.power(np.clip(1.0 - d1, 0.0, None), eta + 1.0)
    val_hi = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * np.power(np.clip(1.0 - d2, 0.0, None), eta + 1.0)
    deltaq = np.where(lo, np.power(val_lo, power) - 1.0, 1.0 - np.power(val_hi, power))
    return np.clip(np.where(mask, x + deltaq, x), 0.0, 1.0)


@dataclass(eq=False)
class GeneticAlgorithm:
    """Elitist real-coded GA: binary tournament, SBX, polynomial mutation."""

    population: np.ndarray
    fitness: np.ndarray
    pop_size: int = 50
    tournament: int = 2
    p_crossover: float = 0.5
    p_mutation: float = 0.9
    eta_crossover: float = 15.0
    eta_mutation: float = 20.0
    kind: str = "ga"

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("population size must be >= 2")
        if self.tournament != 2:
            raise ValueError("only binary tournaments are supported")
        self._truncate(np.atleast_2d(np.asarray(self.population, dtype=float)),
                       np.asarray(self.fitness, dtype=float))

    @classmethod
    def from_data(cls, x_unit, y, pop_size: int = 50, **kw) -> GeneticAlgorithm:
        return cls(np.atleast_2d(np.asarray(x_unit, dtype=float)), np.asarray(y, dtype=float),
                   pop_size=pop_size, **kw)

    @property
    def dim(self) -> int:
        return self.population.shape[1]

    def _truncate(self, x: np.ndarray, y: np.ndarray) -> None:
        # non-finite fitness sorts last
        key = np.where(np.isfinite(y), y, np.inf)
        order = np.argsort(key, kind="stable")[: self.pop_size]
        self.population = x[order]
        self.fitness = y[order]

    def ask(self, k: int, rng: Stream) -> np.ndarray:
        n_pairs = (k + 1) // 2
        key = np.where(np.isfinite(self.fitness), self.fitness, np.inf)
        idx = tournament_select(key, 2 * n_pairs, rng)
        p1 = self.population[idx[:n_pairs]]
        p2 = self.population[idx[n_pairs:]]
        c1, c2 = sbx_crossover(p1, p2, rng, prob=self.p_crossover, eta=self.eta_crossover)
        kids = np.empty((2 * n_pairs, self.dim))
        kids[0::2], kids[1::2] = c1, c2
        kids = polynomial_mutation(kids[:k], rng, prob=self.p_mutation, eta=self.eta_mutation)
        return kids

    def tell(self, x, y) -> None:
        x, y = _as_batch(x, y, self.dim)
        self._truncate(np.vstack([self.population, x]), np.concatenate([self.fitness, y]))


# ----------------------------------------------------------- random / spray


def random_ask(k: int, dim: int, rng: Stream) -> np.ndarray:
    return rng.uniform((k, dim))


def gaussian_spray_ask(incumbent, spread: float, k: int, rng: Stream) -> np.ndarray:
    incumbent = np.asarray(incumbent, dtype=float)
    return np.clip(incumbent + spread * rng.normal((k, incumbent.size)), 0.0, 1.0)


@dataclass(eq=False)
class RandomSearch:
    dim: int
    kind: str = "random"

    def ask(self, k: int, rng: Stream) -> np.ndarray:
        return random_ask(k, self.dim, rng)

    def tell(self, x, y) -> None:
        pass


@dataclass(eq=False)
class GaussianSpray:
    """Isotropic normal cloud around the best point seen so far."""

    incumbent: np.ndarray
    best: float
    spread: float = 0.05
    kind: str = "gaussian_spray"

    @classmethod
    def from_data(cls, x_unit, y, spread: float = 0.05) -> GaussianSpray:
        x_unit = np.atleast_2d(np.asarray(x_unit, dtype=float))
        y = np.asarray(y, dtype=float)
        key = np.where(np.isfinite(y), y, np.inf)
        i = int(np.argmin(key))
        return cls(x_unit[i].copy(), float(key[i]), spread)

    @property
    def dim(self) -> int:
        return self.incumbent.size

    def ask(self, k: int, rng: Stream) -> np.ndarray:
        return gaussian_spray_ask(self.incumbent, self.spread, k, rng)

    def tell(self, x, y) -> None:
        x, y = _as_batch(x, y, self.dim)
        key = np.where(np.isfinite(y), y, np.inf)
        i = int(np.argmin(key))
        if key[i] < self.best:
            self.best = float(key[i])
            self.incumbent = x[i].copy()


def make_strategy(kind: str, x_unit, y, *, pop_size: int = 50, sigma0: float = 0.2,
                  spread: float = 0.05):
    """Build a strategy from the initial design (unit-cube inputs, raw values)."""
    x_unit = np.atleast_2d(np.asarray(x_unit, dtype=float))
    if kind == "cmaes":
        return CmaEs.from_data(x_unit, y, sigma0)
    if kind == "ga":
        return GeneticAlgorithm.from_data(x_unit, y, pop_size)
    if kind == "random":
        return RandomSearch(x_unit.shape[1])
    if kind == "gaussian_spray":
        return GaussianSpray.from_data(x_unit, y, spread)
    raise ValueError(f"unknown strategy {kind!r}; choose from {STRATEGY_KINDS}")
