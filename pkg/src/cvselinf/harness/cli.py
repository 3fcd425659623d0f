"""Command line entry point: ``cvselinf {fit,simulate,check}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..exceptions import CvSelInfError
from .analysis import AnalysisConfig, format_report, run_analysis
from .io import plot_ecdf_svg, read_config, write_ecdf_csv, write_meta, write_results
from .selfcheck import self_check
from .simulate import SimConfig, run_simulation

log = logging.getLogger("cvselinf")

COMMON_DEFAULTS = {
    "folds": 5,
    "steps": 5,
    "penalty": "none",
    "sigma": None,
    "seed": 0,
    "fold_seed": None,
    "include_null_model": False,
    "no_refit_event": False,
    "out": None,
    "format": "csv",
    "plot": False,
}
FIT_DEFAULTS = {**COMMON_DEFAULTS, "response": "y", "standardize": False, "sigma": "plugin"}
SIM_DEFAULTS = {
    **COMMON_DEFAULTS,
    "sigma": "1.0",
    "n": 50,
    "p": 20,
    "sparsity": 0,
    "coef_magnitude": 1.0,
    "noise_sigma": 1.0,
    "replications": 500,
    "full_scale": False,
    "raw_columns": False,
    "dump": False,
    "jobs": 1,
}


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _sigma(text):
    if str(text).lower() == "plugin":
        return "plugin"
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("sigma must be a positive number or 'plugin'") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("sigma must be positive")
    return v


def _add_common(p):
    S = argparse.SUPPRESS
    p.add_argument("--config", help="key = value file mirroring these flags (flags win)")
    p.add_argument("--folds", type=int, default=S, help="number of CV folds K (default 5)")
    p.add_argument("--steps", type=int, default=S, help="largest model size S (default 5)")
    p.add_argument("--penalty", choices=("none", "bic"), default=S)
    p.add_argument("--sigma", default=S,
                   help="known noise sigma, or 'plugin' for the full-model residual estimate")
    p.add_argument("--seed", type=_u64, default=S, help="master seed (default 0)")
    p.add_argument("--fold-seed", type=_u64, default=S,
                   help="shuffle observations before round-robin fold assignment")
    p.add_argument("--include-null-model", action="store_true", default=S,
                   help="let CV choose the empty model")
    p.add_argument("--no-refit-event", action="store_true", default=S,
                   help="do not condition on the full-data refit (comparison studies only)")
    p.add_argument("--out", default=S, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default=S, help="results file format")
    p.add_argument("--plot", action="store_true", default=S, help="also write ecdf.svg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvselinf",
        description="Selective p-values for forward stepwise models sized by K-fold CV.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="analyse a CSV data set")
    fit.add_argument("data", help="CSV with a header row")
    fit.add_argument("--response", default=argparse.SUPPRESS, help="response column (default y)")
    fit.add_argument("--standardize", action="store_true", default=argparse.SUPPRESS,
                     help="center and scale predictors before fitting")
    _add_common(fit)

    sim = sub.add_parser("simulate", help="Monte-Carlo calibration and power runs")
    S = argparse.SUPPRESS
    sim.add_argument("--n", type=int, default=S, help="observations (default 50)")
    sim.add_argument("--p", type=int, default=S, help="predictors (default 20)")
    sim.add_argument("--sparsity", type=int, default=S, help="true nonzero coefficients (default 0)")
    sim.add_argument("--coef-magnitude", type=float, default=S)
    sim.add_argument("--noise-sigma", type=float, default=S,
                     help="true noise sigma when --sigma plugin is used")
    sim.add_argument("--replications", type=int, default=S)
    sim.add_argument("--full-scale", action="store_true", default=S,
                     help="use p = 100 predictors (the large configuration; default is p = 20)")
    sim.add_argument("--raw-columns", action="store_true", default=S,
                     help="keep standard Gaussian columns instead of scaling them to unit norm")
    sim.add_argument("--dump", action="store_true", default=S,
                     help="write each replication's data set to OUT/data/")
    sim.add_argument("--jobs", type=int, default=S, help="parallel worker processes")
    _add_common(sim)

    chk = sub.add_parser("check", help="run the oracle self-check suite")
    chk.add_argument("--level", choices=("fast", "full"), default="fast")
    chk.add_argument("--jobs", type=int, default=1)
    return parser


def _settings(args, defaults) -> dict:
    settings = dict(defaults)
    if getattr(args, "config", None):
        for key, value in read_config(args.config).items():
            if key not in defaults:
                raise CvSelInfError(f"unknown config key {key!r}")
            settings[key] = value
    for key in defaults:
        if key in vars(args):
            settings[key] = getattr(args, key)
    return settings


def _int_or_none(v):
    return None if v is None or v == "" else int(v)


def cmd_fit(args) -> int:
    s = _settings(args, FIT_DEFAULTS)
    cfg = AnalysisConfig(
        response=s["response"],
        folds=int(s["folds"]),
        steps=int(s["steps"]),
        penalty=s["penalty"],
        sigma=_sigma(s["sigma"]),
        fold_seed=_int_or_none(s["fold_seed"]),
        seed=_int_or_none(s["seed"]),
        standardize=bool(s["standardize"]),
        include_null_model=bool(s["include_null_model"]),
        refit_event=not s["no_refit_event"],
        out=s["out"],
        format=s["format"],
        plot=bool(s["plot"]),
    )
    report = run_analysis(args.data, cfg)
    print(format_report(report))
    if cfg.out:
        print(f"wrote {report['outputs']['results']} and {report['outputs']['meta']}")
    return 0


def sim_config_from_settings(s) -> SimConfig:
    sigma = _sigma(s["sigma"])
    if sigma == "plugin":
        noise, mode = float(s["noise_sigma"]), "plugin"
    else:
        noise, mode = float(sigma), "known"
    return SimConfig(
        n=int(s["n"]),
        p=100 if s["full_scale"] else int(s["p"]),
        K=int(s["folds"]),
        S=int(s["steps"]),
        sparsity=int(s["sparsity"]),
        coef_magnitude=float(s["coef_magnitude"]),
        sigma=noise,
        replications=int(s["replications"]),
        seed=int(s["seed"]),
        penalty=s["penalty"],
        sigma_mode=mode,
        fold_seed=_int_or_none(s["fold_seed"]),
        normalize_columns=not s["raw_columns"],
        include_null_model=bool(s["include_null_model"]),
        refit_event=not s["no_refit_event"],
    )


def cmd_simulate(args) -> int:
    s = _settings(args, SIM_DEFAULTS)
    cfg = sim_config_from_settings(s)
    out = Path(s["out"]) if s["out"] else None
    if s["dump"] and out is None:
        raise CvSelInfError("--dump needs --out")
    report = run_simulation(cfg, n_jobs=int(s["jobs"]),
                            dump_dir=out / "data" if s["dump"] else None)
    rows = report.rows
    steps = report.steps_chosen
    sizes, counts = np.unique(steps + 1, return_counts=True)
    print(f"{cfg.replications} replications, {len(rows)} tests, {len(report.skipped)} skipped")
    print("chosen model sizes: " + ", ".join(f"{a}:{b}" for a, b in zip(sizes, counts)))
    for label, flag in (("null", False), ("non-null", True)):
        p = np.array([r.p_value for r in rows if r.is_true_nonnull == flag])
        if p.size:
            print(f"{label} p-values: n={p.size} median={np.median(p):.3f} "
                  f"P(p<0.05)={np.mean(p < 0.05):.3f}")
    if out is not None:
        results = write_results(rows, out, s["format"])
        write_ecdf_csv(rows, out / "ecdf.csv")
        meta = {
            "config": cfg.to_dict(),
            "seeds": {"seed": cfg.seed, "fold_seed": cfg.fold_seed,
                      "sub_seed_rule": "Philox4x64 key = seed * 2**64 + replication + 1"},
            "folds_scheme": "round_robin" if cfg.fold_seed is None else "shuffled",
            "skipped": report.skipped,
            "model_size_counts": {int(a): int(b) for a, b in zip(sizes, counts)},
            "tests": [
                {"replication": o.replication, **t.to_dict()}
                for o in report.outcomes for t in o.tests
            ],
        }
        write_meta(meta, out)
        if s["plot"]:
            plot_ecdf_svg(rows, out / "ecdf.svg")
        print(f"wrote {results}")
    return 0


def cmd_check(args) -> int:
    results = self_check(args.level, n_jobs=args.jobs)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "SOME CHECKS FAILED")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"fit": cmd_fit, "simulate": cmd_simulate, "check": cmd_check}
    try:
        return handlers[args.command](args)
    except (CvSelInfError, argparse.ArgumentTypeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
