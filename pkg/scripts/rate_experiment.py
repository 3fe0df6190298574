"""Fit decay exponents of the excess risk for a grid of capacity exponents.

Example::

    python3 scripts/rate_experiment.py --gammas 0.25 0.5 1.0 --trials 30 --out out/rates
"""

import argparse
from pathlib import Path

from specreg.filters import FilterSpec
from specreg.harness import ExperimentConfig, run_rate_experiments
from specreg.reporting import write_json, write_rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--gammas", type=float, nargs="+", default=[0.5])
    p.add_argument("--zeta", type=float, default=1.0)
    p.add_argument("--a", type=float, nargs="+", default=[0.0, 0.5])
    p.add_argument("--depth", type=int, default=2, help="iterated ridge depth")
    p.add_argument("--d", type=int, default=2000)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--profile", default="geometric(0.5)")
    p.add_argument("--n-grid", type=int, nargs="+", default=[64, 128, 256, 512, 1024, 2048, 4096])
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("out/rates"))
    args = p.parse_args(argv)

    summary = []
    for gamma in args.gammas:
        cfg = ExperimentConfig(gamma=gamma, zeta=args.zeta, d=args.d, noise_sd=args.noise, g0_profile=args.profile,
                               filter=FilterSpec.iterated_ridge(args.depth), n_grid=tuple(args.n_grid),
                               trials=args.trials, seed=args.seed, threads=args.threads)
        for a, rep in run_rate_experiments(cfg, args.a).items():
            tag = f"gamma{gamma:g}_a{a:g}"
            write_rows(args.out / f"{tag}.csv", rep.csv_header, rep.csv_rows())
            write_json(args.out / f"{tag}.json", rep.to_dict())
            summary.append((gamma, a, rep.slope, rep.slope_stderr, rep.theoretical_exponent))
            print(f"gamma={gamma:g} a={a:g}  slope={rep.slope:.4f} +- {rep.slope_stderr:.4f}  "
                  f"theory={rep.theoretical_exponent:.4f}", flush=True)
    write_rows(args.out / "summary.csv", ("gamma", "a", "slope", "stderr", "theory"), summary)


if __name__ == "__main__":
    main()
