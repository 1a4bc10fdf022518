"""The BO loop with heuristic-initialized acquisition maximization.

Each iteration refits the GP, then fills a batch slot by slot. For every
slot each configured strategy asks for ``k`` raw candidates, the top ``n``
by acquisition seed the maximizer, and the strategy's best end point
becomes its candidate. The candidate with the highest acquisition (re-scored
on the larger sample bank) is queued. After the batch is evaluated every
strategy is told every new point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from typing import Callable

import numpy as np

from .acquisition import AcquisitionFunction, AcquisitionSpec, greedy_sequential_batch
from .heuristics import STRATEGY_KINDS, make_strategy
from .maximizer import (Candidate, MaximizerConfig, es_maximize, multi_start_maximize,
                        top_n_select)
from .rng import Stream, normal_bank
from .surrogate import Dataset, FitConfig, fit, from_unit

__all__ = ["LoopConfig", "Problem", "TraceRow", "SlotRecord", "RunTrace", "DiagnosticCounters",
           "VARIANTS", "run", "select_query", "update_diagnostics", "variant_aibo_none",
           "TRACE_COLUMNS", "DIAG_STRATEGIES"]

log = logging.getLogger(__name__)

# strategies, inner maximizer, and (k, n) overrides per variant
VARIANTS = {
    "aibo": (("cmaes", "ga", "random"), "grad", None, None),
    "aibo_none": (("cmaes", "ga", "random"), "none", None, None),
    "bo_grad": (("random",), "grad", 2000, 10),
    "bo_es": (("random",), "es", 2000, 1),
    "bo_random": (("random",), "none", 2000, 1),
    "aibo_ga": (("ga",), "grad", None, None),
    "aibo_cmaes": (("cmaes",), "grad", None, None),
    "aibo_gacma": (("cmaes", "ga"), "grad", None, None),
}

DIAG_STRATEGIES = ("cmaes", "ga", "random")


@dataclass(frozen=True)
class LoopConfig:
    total_evals: int = 1000
    init_samples: int = 50
    k: int | None = None
    n: int | None = None
    batch: int = 10
    strategies: tuple[str, ...] | None = None
    af: str = "ucb"
    beta: float = 1.96
    variant: str = "aibo"
    seed: int = 0
    pop_size: int = 50
    sigma0: float = 0.2
    spray_spread: float = 0.05
    mc_samples: int = 128
    mc_samples_final: int = 512
    quasi_mc: bool = True
    gp_restarts_first: int = 5
    gp_restarts: int = 1
    gp_max_iters: int = 100
    maximizer: MaximizerConfig = MaximizerConfig()
    es_generations: int = 50
    es_popsize: int = 20

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {sorted(VARIANTS)}")
        strategies, _, k, n = VARIANTS[self.variant]
        if self.strategies is None:
            object.__setattr__(self, "strategies", strategies)
        else:
            object.__setattr__(self, "strategies", tuple(self.strategies))
        if self.k is None:
            object.__setattr__(self, "k", k if k is not None else 500)
        if self.n is None:
            object.__setattr__(self, "n", n if n is not None else 1)
        for s in self.strategies:
            if s not in STRATEGY_KINDS:
                raise ValueError(f"unknown strategy {s!r}")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        if len(set(self.strategies)) != len(self.strategies):
            raise ValueError("strategies must be distinct")
        if self.af not in ("ucb", "ei"):
            raise ValueError("af must be 'ucb' or 'ei'")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.init_samples < 2:
            raise ValueError("need at least two initial samples")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if not 1 <= self.n <= self.k:
            raise ValueError(f"need 1 <= n <= k, got n={self.n}, k={self.k}")
        if self.total_evals < self.init_samples:
            raise ValueError("total_evals must cover the initial design")
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if self.mc_samples_final < self.mc_samples:
            raise ValueError("final sample bank must be at least as large as the search bank")

    @property
    def inner(self) -> str:
        return VARIANTS[self.variant][1]


@dataclass(frozen=True)
class Problem:
    """A black-box objective over a box given as ``(d, 2)`` bounds."""

    objective: Callable[[np.ndarray], float]
    bounds: np.ndarray

    def __call__(self, x) -> float:
        return self.objective(x)


TRACE_COLUMNS = (
    "run_seed", "iteration", "eval_index", "strategy", "af_value", "y_raw", "best_so_far",
    "wins_af_cmaes", "wins_af_ga", "wins_af_random",
    "wins_mean_cmaes", "wins_mean_ga", "wins_mean_random",
    "wins_var_cmaes", "wins_var_ga", "wins_var_random",
)


@dataclass(frozen=True)
class TraceRow:
    run_seed: int
    iteration: int
    eval_index: int
    strategy: str
    af_value: float | None
    y_raw: float
    best_so_far: float
    wins_af_cmaes: int = 0
    wins_af_ga: int = 0
    wins_af_random: int = 0
    wins_mean_cmaes: int = 0
    wins_mean_ga: int = 0
    wins_mean_random: int = 0
    wins_var_cmaes: int = 0
    wins_var_ga: int = 0
    wins_var_random: int = 0


@dataclass(frozen=True, eq=False)
class SlotRecord:
    """Per-strategy candidates behind one selection."""

    iteration: int
    slot: int
    strategies: tuple[str, ...]
    af_values: np.ndarray
    post_means: np.ndarray
    post_vars: np.ndarray
    chosen: int


@dataclass
class DiagnosticCounters:
    strategies: tuple[str, ...]
    wins_af_value: dict = field(default_factory=dict)
    wins_low_mean: dict = field(default_factory=dict)
    wins_high_variance: dict = field(default_factory=dict)

    def __post_init__(self):
        for table in (self.wins_af_value, self.wins_low_mean, self.wins_high_variance):
            for s in self.strategies:
                table.setdefault(s, 0)

    def snapshot(self) -> dict:
        out = {}
        for tag, table in (("af", self.wins_af_value), ("mean", self.wins_low_mean),
                           ("var", self.wins_high_variance)):
            for s in DIAG_STRATEGIES:
                out[f"wins_{tag}_{s}"] = int(table.get(s, 0))
        return out


@dataclass
class RunTrace:
    rows: list[TraceRow] = field(default_factory=list)
    slots: list[SlotRecord] = field(default_factory=list)
    counters: DiagnosticCounters | None = None

    @property
    def incumbents(self) -> np.ndarray:
        return np.array([r.best_so_far for r in self.rows])

    @property
    def final_best(self) -> float:
        return self.rows[-1].best_so_far


def select_query(candidates: list[Candidate]) -> int:
    """Index of the highest-acquisition candidate; the first one wins ties."""
    if not candidates:
        raise ValueError("no candidates to select from")
    values = np.array([c.af_value for c in candidates])
    return int(np.argmax(values))


def update_diagnostics(counters: DiagnosticCounters, strategies, af_values, means, variances):
    """Credit the AF, low-mean and high-variance winners (first index on ties)."""
    strategies = list(strategies)
    counters.wins_af_value[strategies[int(np.argmax(af_values))]] += 1
    counters.wins_low_mean[strategies[int(np.argmin(means))]] += 1
    counters.wins_high_variance[strategies[int(np.argmax(variances))]] += 1
    return counters


def _fill_non_finite(y: np.ndarray) -> np.ndarray:
    bad = ~np.isfinite(y)
    if not bad.any():
        return y
    good = y[~bad]
    worst = float(good.max()) if good.size else 1.0
    fill = worst * 10.0 if worst > 0 else worst + 10.0 * max(abs(worst), 1.0)
    return np.where(bad, fill, y)


def _evaluate(problem, x_raw: np.ndarray) -> float:
    try:
        v = float(problem(x_raw))
    except (ValueError, FloatingPointError, ArithmeticError) as err:
        log.warning("objective raised %s; recording nan", err)
        return float("nan")
    if not np.isfinite(v):
        log.warning("objective returned non-finite value %r", v)
    return v


def run(problem, config: LoopConfig = LoopConfig()) -> RunTrace:
    """Run one BO campaign and return its trace."""
    bounds = np.asarray(problem.bounds, dtype=float)
    d = bounds.shape[0]
    root = Stream(config.seed)
    af_kind = f"{config.af}_mc"
    mcfg = replace(config.maximizer, starts=config.n)

    trace = RunTrace(counters=DiagnosticCounters(config.strategies))
    best = np.inf
    x_unit = root.split("init").uniform((config.init_samples, d))
    y_raw = np.empty(config.init_samples)
    for i, u in enumerate(x_unit):
        y_raw[i] = _evaluate(problem, from_unit(u, bounds))
        if np.isfinite(y_raw[i]):
            best = min(best, y_raw[i])
        trace.rows.append(TraceRow(config.seed, 0, i, "init", None, float(y_raw[i]), float(best),
                                   **trace.counters.snapshot()))
    y_fit = _fill_non_finite(y_raw)
    strategies = [make_strategy(kind, x_unit, y_fit, pop_size=config.pop_size,
                                sigma0=config.sigma0, spread=config.spray_spread)
                  for kind in config.strategies]

    warm = None
    iteration = 0
    while len(y_raw) < config.total_evals:
        iteration += 1
        q = min(config.batch, config.total_evals - len(y_raw))
        it_rng = root.split(f"iter-{iteration}")
        data = Dataset.from_raw(from_unit(x_unit, bounds), y_fit, bounds)
        restarts = config.gp_restarts_first if warm is None else config.gp_restarts
        model = fit(data.inputs_unit, data.targets_tf,
                    FitConfig(restarts=restarts, max_iters=config.gp_max_iters,
                              seed=config.seed * 1_000_003 + iteration),
                    warm_start=warm)
        warm = model.log_params
        bank = normal_bank(it_rng.split("bank"), config.mc_samples_final, q, quasi=config.quasi_mc)
        spec = AcquisitionSpec(kind=af_kind, beta=config.beta, mc_samples=config.mc_samples,
                               base_samples=bank, incumbent=float(np.min(data.targets_tf)))
        slot_info: list[tuple[int, float, dict]] = []

        def propose(spec_j: AcquisitionSpec, j: int) -> np.ndarray:
            af = AcquisitionFunction(model, spec_j)
            af_final = AcquisitionFunction(model, spec_j.with_samples(config.mc_samples_final))
            cands = []
            for strat in strategies:
                srng = it_rng.split(f"slot-{j}/{strat.kind}")
                raw = strat.ask(config.k, srng)
                inits, vals = top_n_select(raw, af, config.n)
                if config.inner == "grad":
                    cand = multi_start_maximize(inits, af, mcfg, origin=strat.kind)
                elif config.inner == "es":
                    cand = es_maximize(inits[0], af, srng.split("es"),
                                       generations=config.es_generations,
                                       popsize=config.es_popsize, origin=strat.kind)
                else:
                    cand = Candidate(inits[0], float(vals[0]), strat.kind)
                cands.append(cand)
            points = np.array([c.point for c in cands])
            final = af_final.value(points)
            rescored = [Candidate(c.point, float(v), c.origin) for c, v in zip(cands, final)]
            chosen = select_query(rescored)
            means, variances = af.moments(points)
            update_diagnostics(trace.counters, config.strategies, final, means, variances)
            trace.slots.append(SlotRecord(iteration, j, tuple(config.strategies), final,
                                          means, variances, chosen))
            slot_info.append((chosen, float(final[chosen]), trace.counters.snapshot()))
            return rescored[chosen].point

        batch = greedy_sequential_batch(model, spec, q, propose)
        new_y = np.array([_evaluate(problem, from_unit(u, bounds)) for u in batch])
        base = len(y_raw)
        for j, (u, v) in enumerate(zip(batch, new_y)):
            if np.isfinite(v):
                best = min(best, v)
            chosen, af_val, snapshot = slot_info[j]
            trace.rows.append(TraceRow(config.seed, iteration, base + j, config.strategies[chosen],
                                       af_val, float(v), float(best), **snapshot))
        x_unit = np.vstack([x_unit, batch])
        y_raw = np.concatenate([y_raw, new_y])
        y_fit = _fill_non_finite(y_raw)
        new_fit = y_fit[base:]
        for strat in strategies:
            strat.tell(batch, new_fit)
    return trace


def variant_aibo_none(problem, config: LoopConfig = LoopConfig()) -> RunTrace:
    """Same pipeline, with the gradient maximizer replaced by the top-1 init."""
    keep = {f.name: getattr(config, f.name) for f in fields(config)
            if f.name not in ("variant", "k", "n", "strategies")}
    strategies = config.strategies if config.variant != "aibo" else None
    return run(problem, LoopConfig(variant="aibo_none", strategies=strategies, **keep))
