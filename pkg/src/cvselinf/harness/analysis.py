"""Fit a CV-selected stepwise model to a user CSV and report selective p-values."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Union

from ..estimator import ForwardStepwiseCV
from .io import plot_ecdf_svg, read_csv, write_meta, write_results
from .simulate import ResultRow

PLUGIN_CAVEAT = (
    "sigma was estimated from the full-model residuals and treated as known; "
    "p-values do not account for its estimation error"
)


@dataclass(frozen=True)
class AnalysisConfig:
    response: str = "y"
    folds: int = 5
    steps: int = 5
    penalty: str = "none"
    sigma: Union[str, float] = "plugin"
    fold_seed: Optional[int] = None
    seed: Optional[int] = None
    standardize: bool = False
    include_null_model: bool = False
    refit_event: bool = True
    out: Optional[str] = None
    format: str = "csv"
    plot: bool = False


def run_analysis(data_path, config: AnalysisConfig) -> dict:
    """Fit, test every selected variable, and write outputs if ``config.out`` is set.

    Returns the report as a plain dict (the same content as ``meta.json``).
    """
    X, y, names = read_csv(data_path, config.response)
    est = ForwardStepwiseCV(
        n_folds=config.folds,
        max_steps=config.steps,
        penalty=config.penalty,
        sigma=config.sigma,
        fold_seed=config.fold_seed,
        include_null_model=config.include_null_model,
        refit_event=config.refit_event,
        standardize=config.standardize,
    ).fit(X, y)
    sel = est.selection_

    rows = [
        ResultRow(
            replication=0,
            step_chosen=sel.s_hat,
            variable=t.variable,
            is_true_nonnull=None,
            p_value=t.p_value,
            sigma_used=t.sigma,
            tie_flag=sel.tie,
            entry_step=k,
        )
        for k, t in enumerate(est.tests_)
    ]
    tests = []
    for k, t in enumerate(est.tests_):
        d = t.to_dict()
        d["name"] = names[t.variable]
        d["entry_step"] = k + 1
        d["coef"] = float(est.coef_[t.variable])
        tests.append(d)

    flags = {
        "tie": sel.tie,
        "steps_truncated": bool(sel.meta.get("truncated", False)),
        "sigma_plugin": any(t.sigma_source == "plugin" for t in est.tests_),
        "refit_event": config.refit_event,
        "standardize": config.standardize,
        "include_null_model": config.include_null_model,
    }
    report = {
        "data": str(data_path),
        "n": int(X.shape[0]),
        "p": int(X.shape[1]),
        "predictors": names,
        "config": asdict(config),
        "s_hat": sel.s_hat,
        "model_size": sel.model_size,
        "active_set": list(map(int, sel.active_set)),
        "active_names": [names[j] for j in sel.active_set],
        "cv_sizes": sel.sizes.tolist(),
        "cv_criterion": sel.criterion.tolist(),
        "steps_used": sel.meta.get("S"),
        "n_constraints": len(sel.event),
        "folds": est.folds_.to_dict(),
        "seeds": {"seed": config.seed, "fold_seed": config.fold_seed},
        "flags": flags,
        "tests": tests,
    }
    if flags["sigma_plugin"]:
        report["caveat"] = PLUGIN_CAVEAT

    if config.out:
        out = Path(config.out)
        report["outputs"] = {
            "results": str(write_results(rows, out, config.format)),
            "meta": str(out / "meta.json"),
        }
        if config.plot and rows:
            report["outputs"]["ecdf"] = str(plot_ecdf_svg(rows, out / "ecdf.svg"))
        write_meta(report, out)
    report["_rows"] = rows
    return report


def format_report(report: dict) -> str:
    lines = [
        f"data: {report['data']}  (n={report['n']}, p={report['p']})",
        f"folds: K={report['folds']['K']} ({report['folds']['scheme']}, seed={report['folds']['seed']})",
        f"chosen model size: {report['model_size']}  (step index {report['s_hat']})",
        "CV criterion by size: "
        + ", ".join(f"{s}:{v:.4g}" for s, v in zip(report["cv_sizes"], report["cv_criterion"])),
        f"active set: {report['active_names']}",
    ]
    if report["tests"]:
        lines.append(f"{'variable':>12} {'coef':>10} {'stat':>8} {'p_selective':>12} {'p_naive':>10}")
        for t in report["tests"]:
            lines.append(
                f"{t['name']:>12} {t['coef']:>10.4g} {t['statistic']:>8.3f} "
                f"{t['p_value']:>12.4g} {t['naive_p_value']:>10.3g}"
            )
    flags = [k for k, v in report["flags"].items() if v is True]
    lines.append(f"flags: {', '.join(flags) if flags else 'none'}")
    if "caveat" in report:
        lines.append(f"note: {report['caveat']}")
    return "\n".join(lines)

