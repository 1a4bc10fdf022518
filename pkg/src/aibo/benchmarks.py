"""Synthetic test functions with their search boxes.

All functions are minimized and have a global minimum of 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import Stream

__all__ = ["BenchmarkSpec", "make_benchmark", "evaluate", "random_feasible",
           "ackley", "rosenbrock", "rastrigin", "griewank", "levy", "sphere",
           "DEFAULT_BOUNDS", "MINIMIZERS"]


def ackley(x, a=20.0, b=0.2, c=2.0 * np.pi):
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    s1 = np.sqrt(np.sum(x**2, axis=-1) / d)
    s2 = np.sum(np.cos(c * x), axis=-1) / d
    return -a * np.exp(-b * s1) - np.exp(s2) + a + np.e


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    return np.sum(100.0 * (x[..., 1:] - x[..., :-1] ** 2) ** 2 + (1.0 - x[..., :-1]) ** 2, axis=-1)


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return 10.0 * d + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x), axis=-1)


def griewank(x):
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.shape[-1] + 1)
    return 1.0 + np.sum(x**2, axis=-1) / 4000.0 - np.prod(np.cos(x / np.sqrt(i)), axis=-1)


def levy(x):
    x = np.asarray(x, dtype=float)
    w = 1.0 + (x - 1.0) / 4.0
    head = np.sin(np.pi * w[..., 0]) ** 2
    mid = np.sum((w[..., :-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(np.pi * w[..., :-1] + 1.0) ** 2), axis=-1)
    tail = (w[..., -1] - 1.0) ** 2 * (1.0 + np.sin(2.0 * np.pi * w[..., -1]) ** 2)
    return head + mid + tail


def sphere(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x**2, axis=-1)


_FUNCTIONS = {
    "ackley": ackley,
    "rosenbrock": rosenbrock,
    "rastrigin": rastrigin,
    "griewank": griewank,
    "levy": levy,
    "sphere": sphere,
}

# search ranges as published for the benchmark suite; sphere is ours
DEFAULT_BOUNDS = {
    "ackley": (-5.0, 10.0),
    "rosenbrock": (-5.0, 10.0),
    "rastrigin": (-5.12, 5.12),
    "griewank": (-10.0, 10.0),
    "levy": (-600.0, 600.0),
    "sphere": (-5.0, 5.0),
}

# coordinate value of the (diagonal) global minimizer
MINIMIZERS = {
    "ackley": 0.0,
    "rosenbrock": 1.0,
    "rastrigin": 0.0,
    "griewank": 0.0,
    "levy": 1.0,
    "sphere": 0.0,
}


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    dim: int
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.name not in _FUNCTIONS:
            raise ValueError(f"unknown benchmark {self.name!r}; choose from {sorted(_FUNCTIONS)}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        lo, hi = DEFAULT_BOUNDS[self.name]
        if self.lower is None:
            object.__setattr__(self, "lower", lo)
        if self.upper is None:
            object.__setattr__(self, "upper", hi)
        if not self.lower < self.upper:
            raise ValueError("lower bound must be below upper bound")

    @property
    def bounds(self) -> np.ndarray:
        """``(d, 2)`` array of (lower, upper) pairs."""
        return np.tile([self.lower, self.upper], (self.dim, 1))

    @property
    def minimizer(self) -> np.ndarray:
        return np.full(self.dim, MINIMIZERS[self.name])

    def __call__(self, x) -> float:
        return evaluate(self, x)


def make_benchmark(name: str, dim: int, bounds: tuple[float, float] | None = None) -> BenchmarkSpec:
    if bounds is None:
        return BenchmarkSpec(name, dim)
    return BenchmarkSpec(name, dim, float(bounds[0]), float(bounds[1]))


def evaluate(spec: BenchmarkSpec, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dim,):
        raise ValueError(f"expected a point of shape ({spec.dim},), got {x.shape}")
    if np.any(x < spec.lower) or np.any(x > spec.upper):
        raise ValueError(f"point outside [{spec.lower}, {spec.upper}]^{spec.dim}")
    return float(_FUNCTIONS[spec.name](x))


def random_feasible(spec: BenchmarkSpec, rng: Stream) -> np.ndarray:
    return spec.lower + (spec.upper - spec.lower) * rng.uniform(spec.dim)
