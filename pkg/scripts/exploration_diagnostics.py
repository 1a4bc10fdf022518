#!/usr/bin/env python3
"""Which initializer wins on AF value, low mean and high variance.

Runs the full ensemble (CMA-ES, GA, random) and prints the cumulative win
counters per seed. Random initialization tends to win the high-variance
count while losing on AF value.

    python3 scripts/exploration_diagnostics.py --dim 100 --evals 600 --seeds 3
"""

import argparse

from aibo.benchmarks import make_benchmark
from aibo.loop import LoopConfig, run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--function", default="ackley")
    ap.add_argument("--dim", type=int, default=100)
    ap.add_argument("--evals", type=int, default=600)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--af", default="ucb", choices=["ucb", "ei"])
    args = ap.parse_args(argv)

    problem = make_benchmark(args.function, args.dim)
    print(f"{'seed':>4} {'counter':>14} {'cmaes':>6} {'ga':>6} {'random':>6}   final best")
    for s in range(args.seeds):
        tr = run(problem, LoopConfig(total_evals=args.evals, seed=s, af=args.af))
        c = tr.counters
        for name, table in (("af_value", c.wins_af_value), ("low_mean", c.wins_low_mean),
                            ("high_variance", c.wins_high_variance)):
            tail = f"   {tr.final_best:.5g}" if name == "af_value" else ""
            print(f"{s:>4} {name:>14} {table['cmaes']:>6} {table['ga']:>6} {table['random']:>6}{tail}")


if __name__ == "__main__":
    main()
