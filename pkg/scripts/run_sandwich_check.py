#!/usr/bin/env python3
"""Frequency of the penalty sandwich event across sample sizes.

For the diagonal construction the stochastic penalties should be bracketed
between their population counterparts and 24 times them on most draws once
n is moderately large.

    python scripts/run_sandwich_check.py --n 500 2000 5000
"""
import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from flradapt.functionals import PointEval
from flradapt.harness import StudyConfig, sandwich_frequency
from flradapt.sequences import Regime, SequenceModel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[500, 2000, 5000])
    ap.add_argument("--replicates", type=int, default=200)
    ap.add_argument("--base-seed", type=int, default=20260810)
    args = ap.parse_args()

    grid = tuple(sorted(set(args.n)))
    cfg = StudyConfig(
        model=SequenceModel(regime=Regime.PP, p=1.0, a=1.0),
        spec=PointEval(t0=0.3),
        sigma=1.0,
        n_grid=grid if len(grid) > 1 else (grid[0], grid[0] + 1000),
        replicates=args.replicates,
        base_seed=args.base_seed,
    )
    for n in grid:
        freq = sandwich_frequency(cfg, n)
        print(f"n={n:6d}  sandwich frequency = {freq:.3f}")


if __name__ == "__main__":
    main()
