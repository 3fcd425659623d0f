"""Monte-Carlo experiments: global-null calibration and sparse-signal power."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
from joblib import Parallel, delayed

from ..cvquad import PENALTIES, FoldAssignment, assemble_cv, select_sparsity
from ..exceptions import CvSelInfError
from ..rng import replication_stream
from ..seltest import selective_tests

log = logging.getLogger(__name__)

MAX_SKIP_FRACTION = 0.01


@dataclass(frozen=True)
class SimConfig:
    n: int = 50
    p: int = 20
    K: int = 5
    S: int = 5
    sparsity: int = 0
    coef_magnitude: float = 1.0
    sigma: float = 1.0
    replications: int = 500
    seed: int = 0
    penalty: str = "none"
    sigma_mode: str = "known"
    fold_seed: Optional[int] = None
    normalize_columns: bool = True
    include_null_model: bool = False
    refit_event: bool = True

    def __post_init__(self):
        for name in ("n", "p", "K", "S"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.replications < 0:
            raise ValueError("replications must be non-negative")
        if not 0 <= self.sparsity <= self.p:
            raise ValueError("sparsity must lie in [0, p]")
        if self.K > self.n:
            raise ValueError("K must not exceed n")
        if self.penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}")
        if self.sigma_mode not in ("known", "plugin"):
            raise ValueError("sigma_mode must be 'known' or 'plugin'")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def full_scale(cls, **overrides) -> "SimConfig":
        """n = 50 observations of p = 100 predictors."""
        return cls(**{"n": 50, "p": 100, **overrides})

    def to_dict(self) -> dict:
        return asdict(self)


RESULT_COLUMNS = (
    "replication",
    "step_chosen",
    "variable",
    "is_true_nonnull",
    "p_value",
    "sigma_used",
    "tie_flag",
)


@dataclass(frozen=True)
class ResultRow:
    replication: int
    step_chosen: int
    variable: int
    is_true_nonnull: bool
    p_value: float
    sigma_used: float
    tie_flag: bool
    # position of the variable in the selected model; not part of the CSV schema
    entry_step: int = field(default=0, compare=False)

    def as_record(self) -> dict:
        return {c: getattr(self, c) for c in RESULT_COLUMNS}


@dataclass
class ReplicationOutcome:
    replication: int
    rows: List[ResultRow]
    step_chosen: Optional[int]
    tests: list = field(default_factory=list)
    skipped: Optional[str] = None


@dataclass
class SimulationReport:
    config: SimConfig
    outcomes: List[ReplicationOutcome]

    @property
    def rows(self) -> List[ResultRow]:
        return [r for o in self.outcomes for r in o.rows]

    @property
    def steps_chosen(self) -> np.ndarray:
        return np.array([o.step_chosen for o in self.outcomes if o.skipped is None], dtype=int)

    @property
    def skipped(self) -> list:
        return [(o.replication, o.skipped) for o in self.outcomes if o.skipped is not None]


def draw_dataset(cfg: SimConfig, replication: int):
    """Design, coefficients and response for one replication (deterministic in its sub-seed)."""
    rs = replication_stream(cfg.seed, replication)
    X = rs.normal((cfg.n, cfg.p))
    if cfg.normalize_columns:
        X /= np.linalg.norm(X, axis=0)
    beta = np.zeros(cfg.p)
    if cfg.sparsity:
        support = rs.permutation(cfg.p)[: cfg.sparsity]
        beta[support] = cfg.coef_magnitude * rs.signs(cfg.sparsity)
    y = X @ beta + cfg.sigma * rs.normal(cfg.n)
    return X, y, beta


def folds_for(cfg: SimConfig) -> FoldAssignment:
    if cfg.fold_seed is None:
        return FoldAssignment.round_robin(cfg.n, cfg.K)
    return FoldAssignment.shuffled(cfg.n, cfg.K, cfg.fold_seed)


def analyse(X, y, folds, cfg: SimConfig, sigma):
    cvq = assemble_cv(X, y, folds, cfg.S, penalty=cfg.penalty,
                      include_null_model=cfg.include_null_model)
    sel = select_sparsity(cvq, refit_event=cfg.refit_event)
    return sel, selective_tests(X, y, sel, sigma=sigma)


def run_replication(cfg: SimConfig, replication: int) -> ReplicationOutcome:
    X, y, beta = draw_dataset(cfg, replication)
    sigma = cfg.sigma if cfg.sigma_mode == "known" else "plugin"
    try:
        sel, tests = analyse(X, y, folds_for(cfg), cfg, sigma)
    except (CvSelInfError, np.linalg.LinAlgError) as exc:
        log.warning("replication %d skipped: %s", replication, exc)
        return ReplicationOutcome(replication, [], None, skipped=f"{type(exc).__name__}: {exc}")
    rows = [
        ResultRow(
            replication=replication,
            step_chosen=sel.s_hat,
            variable=t.variable,
            is_true_nonnull=bool(beta[t.variable] != 0),
            p_value=t.p_value,
            sigma_used=t.sigma,
            tie_flag=sel.tie,
            entry_step=k,
        )
        for k, t in enumerate(tests)
    ]
    return ReplicationOutcome(replication, rows, sel.s_hat, tests=tests)


def run_simulation(cfg: SimConfig, n_jobs: int = 1, dump_dir: Optional[Path] = None) -> SimulationReport:
    """Run every replication; fails if more than 1% of them are skipped."""
    if dump_dir is not None:
        from .io import write_dataset

        dump_dir = Path(dump_dir)
        dump_dir.mkdir(parents=True, exist_ok=True)
        for r in range(cfg.replications):
            X, y, _ = draw_dataset(cfg, r)
            write_dataset(dump_dir / f"data_rep{r:04d}.csv", X, y)
    if n_jobs == 1:
        outcomes = [run_replication(cfg, r) for r in range(cfg.replications)]
    else:
        outcomes = Parallel(n_jobs=n_jobs)(
            delayed(run_replication)(cfg, r) for r in range(cfg.replications)
        )
    outcomes.sort(key=lambda o: o.replication)
    report = SimulationReport(cfg, outcomes)
    n_skip = len(report.skipped)
    if cfg.replications and n_skip > MAX_SKIP_FRACTION * cfg.replications:
        raise RuntimeError(
            f"{n_skip} of {cfg.replications} replications failed; first: {report.skipped[0]}"
        )
    return report


def simulate(cfg: SimConfig, n_jobs: int = 1) -> List[ResultRow]:
    return run_simulation(cfg, n_jobs=n_jobs).rows


def ecdf_by_step(rows: List[ResultRow], max_step: Optional[int] = None) -> dict:
    """Empirical CDF of p-values grouped by entry step: ``{step: (sorted_p, ecdf)}``."""
    groups: dict = {}
    for r in rows:
        if max_step is None or r.entry_step < max_step:
            groups.setdefault(r.entry_step, []).append(r.p_value)
    out = {}
    for step in sorted(groups):
        p = np.sort(np.asarray(groups[step]))
        out[step] = (p, np.arange(1, p.size + 1) / p.size)
    return out
