"""Bayesian optimization with heuristic initialization of the acquisition maximizer."""

from .benchmarks import BenchmarkSpec, make_benchmark
from .loop import LoopConfig, Problem, RunTrace, run

__all__ = ["BenchmarkSpec", "LoopConfig", "Problem", "RunTrace", "make_benchmark", "run"]
__version__ = "0.1.0"
