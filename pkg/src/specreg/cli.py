"""Config-driven command line runner.

Usage::

    specreg --config run.json [--seed N] [--threads N] [--out DIR]

The JSON config names a ``command`` and its parameters. Parsing is strict:
unknown or duplicate keys are errors. Every run writes a JSON report, CSV
data and ``manifest.json`` (SHA-256 of each file) into the output directory.
The exit status is 0 iff every pass flag in every report is true, 1 if some
check failed, and 2 on a configuration or runtime error (an ``error.json``
record is written and echoed to stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics, estimator, harness, synthetic
from .filters import FilterSpec, verify_filter_axioms
from .reporting import write_json, write_manifest, write_rows
from .spectral_core import gaussian_kernel, linear_kernel, sym_eigendecompose

COMMANDS = ("verify-filters", "fit", "rates", "lambda-sweep", "effective-dim", "concentration")

_MODEL_DEFAULTS = {
    "gamma": 0.5,
    "zeta": 1.0,
    "R": 1.0,
    "d": 2000,
    "noise_sd": 0.3,
    "g0_profile": "flat_normalized",
}

DEFAULTS: dict[str, dict] = {
    "verify-filters": {
        "kappa2": 1.0,
        "filters": [
            {"kind": "spectral_cutoff", "tau": 2.0},
            {"kind": "gradient", "tau": 1.0},
            {"kind": "gradient", "tau": 2.0},
            {"kind": "iterated_ridge", "depth": 1},
            {"kind": "iterated_ridge", "depth": 2},
            {"kind": "iterated_ridge", "depth": 3},
        ],
        "n_u": 2000,
        "n_lambda": 20,
        "n_alpha": 11,
    },
    "fit": {
        "data": None,
        "filter": {"kind": "iterated_ridge", "depth": 1},
        "lambda": None,
        "kernel": "linear",
        "bandwidth": 1.0,
        "mode": "auto",
    },
    "rates": {
        **_MODEL_DEFAULTS,
        "filter": {"kind": "iterated_ridge", "depth": 2},
        "a": 0.0,
        "n_grid": [64, 128, 256, 512, 1024, 2048, 4096],
        "trials": 50,
        "lambda_rule": "corollary",
        "slope_tolerance": None,
    },
    "lambda-sweep": {
        **_MODEL_DEFAULTS,
        "filter": {"kind": "iterated_ridge", "depth": 2},
        "n": 1024,
        "lambdas": None,
        "n_lambda": 20,
        "a": 0.0,
        "trials": 30,
    },
    "effective-dim": {
        "gamma": 0.5,
        "d": 2000,
        "lambdas": [1e-3, 1e-2, 1e-1, 1.0],
        "n": None,
    },
    "concentration": {
        "gamma": 0.5,
        "d": 200,
        "n_grid": [100, 400, 1600],
        "deltas": [0.05, 0.1],
        "trials": 500,
    },
}

REQUIRED = {"fit": ("data", "lambda")}
_FILTER_KEYS = {"kind", "tau", "eta", "depth"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict
    out: Path = Path("out")
    seed: int = 0
    threads: int = 1
    base_dir: Path = field(default=Path("."), compare=False)

    def to_dict(self) -> dict:
        return {"command": self.command, "seed": self.seed, "threads": self.threads,
                "out": str(self.out), "params": self.params}


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _check_filter(spec: dict) -> dict:
    if not isinstance(spec, dict):
        raise ConfigError("filter must be an object")
    unknown = set(spec) - _FILTER_KEYS
    if unknown:
        raise ConfigError(f"unknown filter key {sorted(unknown)[0]!r}")
    if "kind" not in spec:
        raise ConfigError("missing required field 'filter.kind'")
    return spec


def build_filter(spec: dict, kappa2: float) -> FilterSpec:
    kind = spec["kind"]
    if kind == "spectral_cutoff":
        return FilterSpec.spectral_cutoff(spec.get("tau", 2.0))
    if kind == "gradient":
        return FilterSpec.gradient(spec.get("eta") or 1.0 / kappa2, spec.get("tau", 2.0))
    if kind == "iterated_ridge":
        return FilterSpec.iterated_ridge(spec.get("depth", 1))
    raise ConfigError(f"unknown filter kind {kind!r}")


def parse_config(source: str | Path | dict, seed=None, threads=None, out=None, command=None) -> RunConfig:
    """Load and validate a run config; flags override the file's seed/threads/out."""
    base = Path(".")
    if isinstance(source, dict):
        raw = dict(source)
    else:
        base = Path(source).parent
        try:
            raw = json.loads(Path(source).read_text(encoding="utf-8"), object_pairs_hook=_no_duplicates)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cmd = raw.pop("command", None) or command
    if command and cmd != command:
        raise ConfigError(f"command {command!r} conflicts with config command {cmd!r}")
    if cmd is None:
        raise ConfigError("missing required field 'command'")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}; expected one of {COMMANDS}")
    run_keys = {"seed": raw.pop("seed", 0), "threads": raw.pop("threads", 1), "out": raw.pop("out", "out")}
    params = json.loads(json.dumps(DEFAULTS[cmd]))
    for key, value in raw.items():
        if key not in params:
            raise ConfigError(f"unknown key {key!r} for command {cmd!r}")
        params[key] = value
    for key in REQUIRED.get(cmd, ()):
        if params[key] is None:
            raise ConfigError(f"missing required field {key!r}")
    if "filter" in params:
        _check_filter(params["filter"])
    for spec in params.get("filters", []):
        _check_filter(spec)
    if cmd == "rates":
        harness.LambdaRule.parse(params["lambda_rule"])
        if len(params["n_grid"]) < 3:
            raise ConfigError("rates needs at least 3 values in n_grid to fit a slope")
    seed = run_keys["seed"] if seed is None else seed
    threads = run_keys["threads"] if threads is None else threads
    out = run_keys["out"] if out is None else out
    if not (isinstance(seed, int) and 0 <= seed < 2**64):
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if not (isinstance(threads, int) and threads >= 1):
        raise ConfigError("threads must be a positive integer")
    return RunConfig(cmd, params, Path(out), seed, threads, base)


# Commands ---------------------------------------------------------------------------


def _model(p: dict) -> synthetic.DiagonalModel:
    return synthetic.make_model(p["gamma"], p["zeta"], p["R"], p["d"], p["noise_sd"], p["g0_profile"])


def _cmd_verify_filters(cfg: RunConfig):
    p = cfg.params
    k2 = p["kappa2"]
    lam_grid = np.geomspace(1e-4, 1.0, p["n_lambda"])
    u_grid = np.geomspace(1e-8 * k2, k2, p["n_u"])
    alpha = np.linspace(0.0, 1.0, p["n_alpha"])
    reports = []
    for spec in p["filters"]:
        f = build_filter(spec, k2)
        reports.append(verify_filter_axioms(f, k2, lam_grid, u_grid, alpha, np.linspace(0, f.tau, p["n_alpha"])))
    rows = [(r.filter, r.tau, r.E, r.F_tau, r.max_bound_g, r.max_bound_residual, r.passed) for r in reports]
    files = [
        write_json(cfg.out / "axioms.json", [r.to_dict() for r in reports]),
        write_rows(cfg.out / "axioms.csv", ("filter", "tau", "E", "F_tau", "max_bound_g", "max_bound_residual", "pass"), rows),
    ]
    return [r.passed for r in reports], files


def _cmd_fit(cfg: RunConfig):
    p = cfg.params
    path = Path(p["data"])
    if not path.is_absolute():
        path = cfg.base_dir / path
    data = estimator.read_csv(path)
    filt = build_filter(p["filter"], data.kappa2)
    if p["kernel"] == "linear":
        mode = p["mode"]
        est = {"auto": estimator.fit, "primal": estimator.fit_primal, "dual": estimator.fit_dual}[mode](data, filt, p["lambda"])
    elif p["kernel"] == "gaussian":
        kdata = estimator.Dataset(list(data.inputs), data.outputs, kernel=gaussian_kernel(p["bandwidth"]))
        est = estimator.fit_dual(kdata, filt, p["lambda"])
    else:
        raise ConfigError(f"unknown kernel {p['kernel']!r}")
    fitted = estimator.predict(est, data.inputs if est.kernel in (None, linear_kernel) else list(data.inputs))
    report = {
        "name": "fit",
        "grid": {"n": data.n, "d": data.d, "kappa2": data.kappa2},
        "ratio": None,
        "pass": True,
        "mode": est.mode,
        "lambda": est.lam,
        "lambda_realized": est.lam_realized,
        "filter": filt.to_dict(),
        "coefficients": [float(c) for c in est.coef],
        "train_mse": float(np.mean((np.asarray(fitted) - data.outputs) ** 2)),
    }
    files = [
        write_json(cfg.out / "fit.json", report),
        write_rows(cfg.out / "fitted.csv", ("index", "y", "fitted"),
                   [(i, float(y), float(f)) for i, (y, f) in enumerate(zip(data.outputs, fitted))]),
    ]
    return [True], files


def _cmd_rates(cfg: RunConfig):
    p = cfg.params
    model = _model(p)
    a_values = p["a"] if isinstance(p["a"], list) else [p["a"]]
    config = harness.ExperimentConfig(
        gamma=p["gamma"], zeta=p["zeta"], R=p["R"], d=p["d"], noise_sd=p["noise_sd"], g0_profile=p["g0_profile"],
        filter=build_filter(p["filter"], model.kappa2), a=a_values[0], n_grid=tuple(p["n_grid"]),
        trials=p["trials"], lambda_rule=harness.LambdaRule.parse(p["lambda_rule"]), seed=cfg.seed,
        threads=cfg.threads, slope_tolerance=p["slope_tolerance"],
    )
    reports = harness.run_rate_experiments(config, a_values)
    files, flags = [], []
    for a, rep in reports.items():
        tag = f"a{a:g}"
        files.append(write_json(cfg.out / f"rates_{tag}.json", rep.to_dict()))
        files.append(write_rows(cfg.out / f"rates_{tag}.csv", rep.csv_header, rep.csv_rows()))
        flags.append(rep.passed)
    return flags, files


def _cmd_lambda_sweep(cfg: RunConfig):
    p = cfg.params
    model = _model(p)
    n = p["n"]
    lams = p["lambdas"] or list(np.geomspace(1.0 / n, 1.0, p["n_lambda"]))
    rep = harness.run_lambda_sweep(model, build_filter(p["filter"], model.kappa2), n, lams, p["a"], p["trials"],
                                   cfg.seed, cfg.threads)
    files = [write_json(cfg.out / "sweep.json", rep.to_dict()),
             write_rows(cfg.out / "sweep.csv", rep.csv_header, rep.csv_rows())]
    return [True], files


def _cmd_effective_dim(cfg: RunConfig):
    p = cfg.params
    model = synthetic.make_model(p["gamma"], 0.0, 1.0, p["d"])
    lams = [float(l) for l in p["lambdas"]]
    emp = None
    if p["n"]:
        x = synthetic.sample(model, p["n"], synthetic.derive_seed(cfg.seed, p["n"])).inputs
        emp = sym_eigendecompose(x.T @ x / p["n"]).clamped()
    rows = []
    for lam in lams:
        pop = synthetic.effective_dimension(model, lam)
        e = diagnostics.empirical_effective_dim(emp, lam) if emp is not None else float("nan")
        rows.append((lam, pop, e, pop * lam**model.gamma))
    report = {
        "name": "effective_dim",
        "grid": {"gamma": model.gamma, "d": model.d, "lambdas": lams, "n": p["n"]},
        "ratio": None,
        "pass": True,
        "c_gamma": synthetic.capacity_constant(model, model.gamma, lams),
    }
    files = [write_json(cfg.out / "effective_dim.json", report),
             write_rows(cfg.out / "effective_dim.csv", ("lambda", "population", "empirical", "N_times_lambda_gamma"), rows)]
    return [True], files


def _cmd_concentration(cfg: RunConfig):
    p = cfg.params
    model = synthetic.make_model(p["gamma"], 0.0, 1.0, p["d"])
    reports = [diagnostics.check_concentration(model, n, p["trials"], delta, cfg.seed, cfg.threads)
               for n in p["n_grid"] for delta in p["deltas"]]
    rows = [row for r in reports for row in r.csv_rows()]
    files = [write_json(cfg.out / "concentration.json", [r.to_dict() for r in reports]),
             write_rows(cfg.out / "concentration.csv", diagnostics.ConcentrationReport.csv_header, rows)]
    return [r.passed for r in reports], files


_HANDLERS = {
    "verify-filters": _cmd_verify_filters,
    "fit": _cmd_fit,
    "rates": _cmd_rates,
    "lambda-sweep": _cmd_lambda_sweep,
    "effective-dim": _cmd_effective_dim,
    "concentration": _cmd_concentration,
}


def run(cfg: RunConfig) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    try:
        flags, files = _HANDLERS[cfg.command](cfg)
    except (ValueError, RuntimeError, OSError) as exc:
        return _fail(cfg.out, exc)
    files.append(write_json(cfg.out / "config.json", cfg.to_dict()))
    write_manifest(cfg.out, files)
    return 0 if all(flags) else 1


def _fail(out: Path | None, exc: Exception) -> int:
    record = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(record), file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "error.json", record)
        except OSError:
            pass
    return 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="specreg", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run config")
    parser.add_argument("--seed", type=int, help="master seed (overrides config)")
    parser.add_argument("--threads", type=int, help="worker threads; affects scheduling only")
    parser.add_argument("--out", help="output directory (overrides config)")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config, seed=args.seed, threads=args.threads, out=args.out, command=args.command)
    except (ValueError, OSError) as exc:
        return _fail(Path(args.out) if args.out else None, exc)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
