"""Population bias and norm bounds for each filter family on the diagonal model.

Example::

    python3 scripts/bias_bounds.py --zetas 0.25 0.5 1 2 --out out/bias
"""

import argparse
from pathlib import Path

import numpy as np

from specreg.diagnostics import check_bias_bounds, check_population_norm
from specreg.filters import FilterSpec
from specreg.reporting import write_json, write_rows
from specreg.synthetic import make_model


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--zetas", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0])
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--d", type=int, default=500)
    p.add_argument("--profile", default="flat_normalized")
    p.add_argument("--out", type=Path, default=Path("out/bias"))
    args = p.parse_args(argv)

    lams = np.geomspace(1e-3, 1.0, 30)
    summary = []
    for zeta in args.zetas:
        model = make_model(args.gamma, zeta, 1.0, args.d, g0_profile=args.profile)
        filters = [FilterSpec.spectral_cutoff(), FilterSpec.ridge(), FilterSpec.iterated_ridge(2),
                   FilterSpec.gradient(1.0 / model.kappa2)]
        for f in filters:
            for rep in (check_bias_bounds(model, f, lams, [0.0, min(0.5, zeta)]),
                        check_population_norm(model, f, lams)):
                tag = f"{rep.name}_zeta{zeta:g}_{f.name}"
                write_rows(args.out / f"{tag}.csv", rep.csv_header, rep.rows)
                write_json(args.out / f"{tag}.json", rep.to_dict())
                summary.append((zeta, f.name, rep.name, rep.max_ratio, rep.passed, rep.saturated))
                flag = " (beyond qualification)" if rep.saturated else ""
                print(f"zeta={zeta:g} {f.name:22s} {rep.name:16s} max ratio {rep.max_ratio:9.4f} "
                      f"{'pass' if rep.passed else 'FAIL'}{flag}")
    write_rows(args.out / "summary.csv", ("zeta", "filter", "check", "max_ratio", "pass", "saturated"), summary)


if __name__ == "__main__":
    main()
