"""Reading design CSVs and writing results, metadata, ECDFs and plots."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..exceptions import CSVParseError
from .simulate import RESULT_COLUMNS, ecdf_by_step


def read_csv(path, response: str):
    """Parse a header-first CSV into ``(X, y, predictor_names)``.

    Every non-response column is a numeric predictor; blanks are errors.
    Rows are numbered from 1 for the header line.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CSVParseError(f"{path} is empty", row=1) from None
        header = [h.strip() for h in header]
        if response not in header:
            raise CSVParseError(f"response column {response!r} not found in header {header}",
                                row=1, column=response)
        if len(set(header)) != len(header):
            raise CSVParseError("duplicate column names in header", row=1)
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise CSVParseError(
                    f"expected {len(header)} fields, found {len(rec)}", row=lineno
                )
            vals = []
            for name, cell in zip(header, rec):
                cell = cell.strip()
                if not cell:
                    raise CSVParseError("missing value", row=lineno, column=name)
                try:
                    v = float(cell)
                except ValueError:
                    raise CSVParseError(f"non-numeric value {cell!r}", row=lineno, column=name) from None
                if not math.isfinite(v):
                    raise CSVParseError(f"non-finite value {cell!r}", row=lineno, column=name)
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise CSVParseError(f"{path} has no data rows", row=2)
    data = np.array(rows)
    r = header.index(response)
    predictors = [h for i, h in enumerate(header) if i != r]
    if not predictors:
        raise CSVParseError("no predictor columns besides the response", row=1)
    X = np.delete(data, r, axis=1)
    return X, data[:, r], predictors


def write_dataset(path, X, y, response="y", names=None):
    """Write ``y`` and the columns of ``X`` with round-trip exact float formatting."""
    names = names or [f"x{j}" for j in range(X.shape[1])]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([response, *names])
        for yi, xi in zip(y, X):
            w.writerow([repr(float(yi)), *(repr(float(v)) for v in xi)])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def write_results(rows, out_dir, fmt="csv") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = [r.as_record() for r in rows]
    if fmt == "csv":
        path = out_dir / "results.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RESULT_COLUMNS)
            for rec in records:
                w.writerow([_fmt(rec[c]) for c in RESULT_COLUMNS])
    elif fmt == "json":
        path = out_dir / "results.json"
        path.write_text(json.dumps(records, indent=2, default=_json_default))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def read_results_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_meta(meta: dict, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "meta.json"
    path.write_text(json.dumps(meta, indent=2, default=_json_default))
    return path


def write_ecdf_csv(rows, path, max_step=None) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "p_value", "ecdf"])
        for step, (p, F) in ecdf_by_step(rows, max_step).items():
            for pv, fv in zip(p, F):
                w.writerow([step + 1, repr(float(pv)), repr(float(fv))])
    return path


def plot_ecdf_svg(rows, path, max_step=3, title="Selective p-values") -> Path:
    """Per-step ECDFs of the p-values against the uniform diagonal, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([0, 1], [0, 1], color="grey", lw=1, ls="--", label="uniform")
    for step, (p, F) in ecdf_by_step(rows, max_step).items():
        ax.step(np.concatenate([[0], p, [1]]), np.concatenate([[0], F, [1]]),
                where="post", label=f"step {step + 1} (n={p.size})")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("p-value")
    ax.set_ylabel("empirical CDF")
    ax.set_title(title)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return Path(path)


_TRUE = {"true", "yes", "on"}
_FALSE = {"false", "no", "off"}


def read_config(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CSVParseError(f"expected 'key = value' in config {path}", row=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        low = value.lower()
        if low in _TRUE:
            out[key] = True
        elif low in _FALSE:
            out[key] = False
        else:
            out[key] = value
    return out
