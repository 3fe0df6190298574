"""Median error over a grid of regularization parameters, with and without noise.

Example::

    python3 scripts/lambda_sweep.py --n 1024 --trials 30 --out out/sweep
"""

import argparse
from pathlib import Path

import numpy as np

from specreg.filters import FilterSpec
from specreg.harness import run_lambda_sweep
from specreg.reporting import write_json, write_rows
from specreg.synthetic import make_model


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--n-lambda", type=int, default=20)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--d", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--profile", default="geometric(0.5)")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("out/sweep"))
    args = p.parse_args(argv)

    grid = np.geomspace(1.0 / args.n, 1.0, args.n_lambda)
    filt = FilterSpec.iterated_ridge(args.depth)
    for tag, noise in (("noisy", args.noise), ("noiseless", 0.0)):
        model = make_model(args.gamma, args.zeta, 1.0, args.d, noise, args.profile)
        rep = run_lambda_sweep(model, filt, args.n, grid, args.a, args.trials, args.seed, args.threads)
        write_rows(args.out / f"{tag}.csv", rep.csv_header, rep.csv_rows())
        write_json(args.out / f"{tag}.json", rep.to_dict())
        print(f"{tag}: argmin lambda={rep.argmin_lambda:.4g} (index {rep.argmin}), "
              f"interior={rep.interior_minimum}, non-decreasing beyond first={rep.non_decreasing_from(1)}")
        for lam, med in zip(grid, rep.medians):
            print(f"  {lam:10.4g}  {med:.5g}")


if __name__ == "__main__":
    main()
