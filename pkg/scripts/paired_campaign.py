#!/usr/bin/env python3
"""Paired aibo vs bo-grad campaign on one benchmark, with a win table.

    python3 scripts/paired_campaign.py --function ackley --dim 20 --evals 1000 --reps 5
"""

import argparse
import sys

import numpy as np

from aibo.harness import parse_cli, run_campaign


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--function", default="ackley")
    ap.add_argument("--dim", type=int, default=20)
    ap.add_argument("--evals", type=int, default=1000)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--variants", default="aibo,bo-grad")
    ap.add_argument("--out", default="runs/paired")
    args = ap.parse_args(argv)

    cfg = parse_cli(["--function", args.function, "--dim", str(args.dim), "--evals", str(args.evals),
                     "--reps", str(args.reps), "--seed", str(args.seed), "--jobs", str(args.jobs),
                     "--variant", args.variants, "--out", args.out])
    finals = run_campaign(cfg)["finals"]
    names = list(finals)
    print("seed  " + "  ".join(f"{n:>12}" for n in names))
    for r in range(args.reps):
        print(f"{args.seed + r:<5} " + "  ".join(f"{finals[n][r]:12.5g}" for n in names))
    print("med   " + "  ".join(f"{np.median(finals[n]):12.5g}" for n in names))
    if len(names) == 2:
        wins = sum(a < b for a, b in zip(finals[names[0]], finals[names[1]]))
        print(f"{names[0]} beats {names[1]} on {wins}/{args.reps} seeds")
    return 0


if __name__ == "__main__":
    sys.exit(main())
