#!/usr/bin/env python3
"""Initializer and maximizer ablation on a single benchmark.

Compares aibo against its single-strategy and no-ascent variants plus the
random-init baselines. Prints the median final incumbent per variant.

    python3 scripts/ablation.py --function ackley --dim 20 --evals 500 --reps 3
"""

import argparse

import numpy as np

from aibo.benchmarks import make_benchmark
from aibo.loop import LoopConfig, run

VARIANTS = ["aibo", "aibo_none", "aibo_ga", "aibo_cmaes", "aibo_gacma", "bo_grad", "bo_es", "bo_random"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--function", default="ackley")
    ap.add_argument("--dim", type=int, default=20)
    ap.add_argument("--evals", type=int, default=500)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--variants", default=",".join(VARIANTS))
    args = ap.parse_args(argv)

    problem = make_benchmark(args.function, args.dim)
    for v in args.variants.split(","):
        finals = [run(problem, LoopConfig(variant=v.strip(), total_evals=args.evals, seed=s)).final_best
                  for s in range(args.reps)]
        print(f"{v:<12} median {np.median(finals):10.5g}   runs {' '.join(f'{f:.4g}' for f in finals)}", flush=True)


if __name__ == "__main__":
    main()
