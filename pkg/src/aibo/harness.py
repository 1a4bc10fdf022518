"""Command-line campaigns: seeded repetitions, trace CSVs and summaries.

Example::

    aibo --function ackley --dim 20 --evals 1000 --variant aibo,bo-grad --reps 5 --out runs/

writes ``runs/<variant>/trace_seed<S>.csv`` per repetition,
``runs/<variant>/summary.csv`` per variant and, for several variants,
``runs/comparison.csv`` with paired final incumbents.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .benchmarks import make_benchmark
from .loop import TRACE_COLUMNS, VARIANTS, LoopConfig, RunTrace, TraceRow, run

__all__ = ["CampaignConfig", "ConfigError", "parse_cli", "run_campaign", "main",
           "write_trace_csv", "read_trace_csv", "summarize", "read_config_file"]

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("eval_index", "median", "mean", "q25", "q75", "iqr")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    function: str
    dim: int
    loops: tuple[LoopConfig, ...]
    reps: int = 5
    seed: int = 0
    out: Path = Path("runs")
    jobs: int = 1
    bounds: tuple[float, float] | None = None

    @property
    def variants(self) -> tuple[str, ...]:
        return tuple(c.variant for c in self.loops)


# flag name -> (type, LoopConfig field or None)
_FLAGS = {
    "function": (str, None),
    "dim": (int, None),
    "evals": (int, "total_evals"),
    "batch": (int, "batch"),
    "af": (str, "af"),
    "beta": (float, "beta"),
    "variant": (str, None),
    "strategies": (str, None),
    "k": (int, "k"),
    "n": (int, "n"),
    "init-samples": (int, "init_samples"),
    "pop-size": (int, "pop_size"),
    "sigma0": (float, "sigma0"),
    "seed": (int, None),
    "reps": (int, None),
    "jobs": (int, None),
    "out": (str, None),
    "lower": (float, None),
    "upper": (float, None),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="aibo", description="Run seeded BO campaigns on synthetic benchmarks.")
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--function", help="benchmark name (ackley, rosenbrock, rastrigin, griewank, levy, sphere)")
    p.add_argument("--dim", type=int)
    p.add_argument("--evals", type=int, help="total evaluations including the initial design [1000]")
    p.add_argument("--batch", type=int, help="points per BO iteration [10]")
    p.add_argument("--af", choices=["ucb", "ei"])
    p.add_argument("--beta", type=float, help="UCB exploration weight [1.96]")
    p.add_argument("--variant", help="comma list of: " + ",".join(v.replace("_", "-") for v in VARIANTS))
    p.add_argument("--strategies", help="comma list overriding the variant's strategies")
    p.add_argument("--k", type=int, help="raw candidates per strategy")
    p.add_argument("--n", type=int, help="maximizer starts per strategy")
    p.add_argument("--init-samples", type=int, help="uniform initial design size [50]")
    p.add_argument("--pop-size", type=int, help="GA population [50]")
    p.add_argument("--sigma0", type=float, help="initial CMA-ES step size [0.2]")
    p.add_argument("--seed", type=int, help="base seed; repetitions use seed..seed+reps-1 [0]")
    p.add_argument("--reps", type=int, help="repetitions per variant [5]")
    p.add_argument("--jobs", type=int, help="parallel worker processes [1]")
    p.add_argument("--out", help="output directory [runs]")
    p.add_argument("--lower", type=float, help="override the benchmark's lower bound")
    p.add_argument("--upper", type=float, help="override the benchmark's upper bound")
    return p


def read_config_file(path) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in _FLAGS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def parse_cli(argv=None) -> CampaignConfig:
    args = vars(_build_parser().parse_args(argv))
    merged: dict[str, object] = {}
    if args.get("config"):
        try:
            file_values = read_config_file(args["config"])
        except OSError as err:
            raise ConfigError(f"cannot read config file: {err}") from err
        for key, raw in file_values.items():
            typ = _FLAGS[key][0]
            try:
                merged[key] = typ(raw)
            except ValueError as err:
                raise ConfigError(f"bad value for {key}: {raw!r}") from err
    for key in _FLAGS:
        value = args.get(key.replace("-", "_"))
        if value is not None:
            merged[key] = value

    for required in ("function", "dim"):
        if required not in merged:
            raise ConfigError(f"--{required} is required")

    loop_kw = {fname: merged[flag] for flag, (_, fname) in _FLAGS.items()
               if fname is not None and flag in merged}
    if "strategies" in merged:
        loop_kw["strategies"] = tuple(s.strip().replace("-", "_")
                                      for s in str(merged["strategies"]).split(",") if s.strip())
    variants = [v.strip().replace("-", "_") for v in str(merged.get("variant", "aibo")).split(",")]
    try:
        loops = tuple(LoopConfig(variant=v, **loop_kw) for v in variants if v)
    except (ValueError, TypeError) as err:
        raise ConfigError(str(err)) from err
    if not loops:
        raise ConfigError("no variant given")
    reps = int(merged.get("reps", 5))
    jobs = int(merged.get("jobs", 1))
    if reps < 1:
        raise ConfigError("--reps must be >= 1")
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    seed = int(merged.get("seed", 0))
    if seed < 0:
        raise ConfigError("--seed must be non-negative")
    bounds = None
    if "lower" in merged or "upper" in merged:
        bounds = (merged.get("lower"), merged.get("upper"))
    try:
        spec = make_benchmark(str(merged["function"]), int(merged["dim"]))
        if bounds is not None:
            bounds = (bounds[0] if bounds[0] is not None else spec.lower,
                      bounds[1] if bounds[1] is not None else spec.upper)
            make_benchmark(spec.name, spec.dim, bounds)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    return CampaignConfig(spec.name, spec.dim, loops, reps, seed, Path(str(merged.get("out", "runs"))),
                          jobs, bounds)


# ------------------------------------------------------------------- CSV I/O


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace_csv(trace: RunTrace, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace.rows:
            w.writerow([_fmt(getattr(row, c)) for c in TRACE_COLUMNS])


def read_trace_csv(path) -> RunTrace:
    types = {f.name: f.type for f in dataclasses.fields(TraceRow)}
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        for rec in reader:
            kw = {}
            for name, raw in rec.items():
                t = types[name]
                if name == "strategy":
                    kw[name] = raw
                elif name == "af_value":
                    kw[name] = None if raw == "" else float(raw)
                elif t in ("int", int):
                    kw[name] = int(raw)
                else:
                    kw[name] = float(raw)
            rows.append(TraceRow(**kw))
    return RunTrace(rows=rows)


def summarize(traces: list[RunTrace]) -> np.ndarray:
    """Per-evaluation statistics of the incumbent across repetitions.

    Returns an array with columns ``SUMMARY_COLUMNS``.
    """
    inc = np.array([t.incumbents for t in traces])
    q25, med, q75 = np.percentile(inc, [25, 50, 75], axis=0)
    idx = np.arange(inc.shape[1])
    return np.column_stack([idx, med, inc.mean(axis=0), q25, q75, q75 - q25])


def _write_summary(stats: np.ndarray, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in stats:
            w.writerow([str(int(row[0]))] + [repr(float(v)) for v in row[1:]])


def _one_run(job):
    function, dim, bounds, loop_cfg = job
    return run(make_benchmark(function, dim, bounds), loop_cfg)


def run_campaign(config: CampaignConfig) -> dict:
    """Run every (variant, seed) pair and write CSVs; returns written paths."""
    seeds = [config.seed + r for r in range(config.reps)]
    jobs = [(config.function, config.dim, config.bounds, dataclasses.replace(loop, seed=s))
            for loop in config.loops for s in seeds]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            traces = list(pool.map(_one_run, jobs))
    else:
        traces = [_one_run(j) for j in jobs]

    out = Path(config.out)
    written: dict[str, object] = {"traces": {}, "summaries": {}}
    finals: dict[str, list[float]] = {}
    for i, loop in enumerate(config.loops):
        vdir = out / loop.variant.replace("_", "-")
        vdir.mkdir(parents=True, exist_ok=True)
        vtraces = traces[i * len(seeds):(i + 1) * len(seeds)]
        paths = []
        for s, tr in zip(seeds, vtraces):
            p = vdir / f"trace_seed{s}.csv"
            write_trace_csv(tr, p)
            paths.append(p)
        spath = vdir / "summary.csv"
        _write_summary(summarize(vtraces), spath)
        written["traces"][loop.variant] = paths
        written["summaries"][loop.variant] = spath
        finals[loop.variant] = [tr.final_best for tr in vtraces]
        log.info("%s: median final incumbent %.6g", loop.variant, float(np.median(finals[loop.variant])))

    if len(config.loops) > 1:
        cpath = out / "comparison.csv"
        names = [loop.variant for loop in config.loops]
        with cpath.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["seed"] + [f"final_{v}" for v in names] + ["best_variant"])
            for r, s in enumerate(seeds):
                vals = [finals[v][r] for v in names]
                w.writerow([s] + [repr(float(v)) for v in vals] + [names[int(np.argmin(vals))]])
            w.writerow(["median"] + [repr(float(np.median(finals[v]))) for v in names]
                       + [names[int(np.argmin([np.median(finals[v]) for v in names]))]])
        written["comparison"] = cpath
    written["finals"] = finals
    return written


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = parse_cli(argv)
    except ConfigError as err:
        print(f"aibo: configuration error: {err}", file=sys.stderr)
        return 2
    try:
        written = run_campaign(config)
    except Exception as err:  # noqa: BLE001 - any runtime failure maps to exit 1
        log.exception("campaign failed: %s", err)
        return 1
    for v, meds in written["finals"].items():
        print(f"{v}\tmedian final best {np.median(meds):.6g}\t({len(meds)} runs)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
