"""Oracle checks of the quadratic machinery, runnable from the CLI or the test suite."""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..cvquad import FoldAssignment, assemble_cv, select_sparsity
from ..seltest import truncated_chi_survival
from ..intervals import IntervalUnion
from . import oracles
from .simulate import SimConfig, run_simulation


@dataclass
class CheckResult:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.name}: measured={self.measured:.3g} "
                f"tolerance={self.tolerance:.3g} ({self.seconds:.1f}s) {self.detail}").rstrip()


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    return wrapper


def random_instance(rng, n_max=40, p_max=10, Ks=(2, 3, 5), S_max=4, signal=True):
    """Random design, response and folds small enough for brute-force oracles."""
    K = int(rng.choice(Ks))
    n = int(rng.integers(max(3 * K, 10), n_max + 1))
    p = int(rng.integers(2, p_max + 1))
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    if signal:
        k = int(rng.integers(0, min(3, p) + 1))
        y = y + X[:, :k] @ rng.choice([-1.0, 1.0], k) * rng.uniform(0, 1.5)
    if rng.random() < 0.5:
        folds = FoldAssignment.round_robin(n, K)
    else:
        folds = FoldAssignment.shuffled(n, K, int(rng.integers(0, 2 ** 31)))
    n_train_min = n - int(folds.sizes.max())
    S = int(rng.integers(1, min(S_max, p, n_train_min) + 1))
    return X, y, folds, S


@_timed
def check_rss_identity(instances=50, probes=20, tol=1e-8, seed=11) -> CheckResult:
    """Quadratic-form CV RSS against a fold-by-fold refit with the fold models frozen."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        X, y, folds, S = random_instance(rng)
        include_null = bool(rng.random() < 0.3)
        cvq = assemble_cv(X, y, folds, S, include_null_model=include_null)
        fold_paths = [p.active_sets for p in cvq.paths]
        for _ in range(probes):
            z = rng.standard_normal(folds.n) * rng.uniform(0.1, 10)
            quad = cvq.cv_rss(z)
            direct = oracles.direct_cv_rss(X, z, folds, fold_paths, cvq.sizes)
            rel = np.abs(quad - direct) / np.maximum(np.abs(direct), 1e-300)
            worst = max(worst, float(rel.max()))
    return CheckResult("rss_identity", worst, tol, worst <= tol,
                       f"{instances} instances x {probes} probes")


@_timed
def check_selection(instances=200, seed=12) -> CheckResult:
    """Chosen size from the quadratic forms against plain CV with greedy refits."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    for i in range(instances):
        X, y, folds, S = random_instance(rng)
        penalty = "bic" if i % 3 == 2 else "none"
        include_null = i % 4 == 3
        sel = select_sparsity(assemble_cv(X, y, folds, S, penalty=penalty,
                                          include_null_model=include_null))
        size, paths, _ = oracles.direct_cv_select(X, y, folds, sel.meta["S"], penalty, include_null)
        same_paths = all(list(map(list, p.active_sets)) == q for p, q in zip(sel.cvq.paths, paths))
        if size != sel.model_size or not same_paths:
            mismatches += 1
    return CheckResult("selection_argmin", mismatches, 0, mismatches == 0,
                       f"{mismatches}/{instances} mismatches")


@_timed
def check_event_rerun(instances=5, resamples=200, boundary_tol=1e-6, seed=13) -> CheckResult:
    """Event membership against rerunning the whole pipeline on resampled responses."""
    rng = np.random.default_rng(seed)
    mismatches = inside = excluded = total = 0
    for _ in range(instances):
        n, p, K, S = 30, 8, 5, 4
        X = rng.standard_normal((n, p))
        y = X[:, :2] @ np.array([1.0, -1.0]) + rng.standard_normal(n)
        folds = FoldAssignment.round_robin(n, K)
        sel = select_sparsity(assemble_cv(X, y, folds, S))
        sig = sel.signature()
        for k in range(resamples):
            scale = (0.02, 0.1, 0.3, 1.0)[k % 4]
            z = y + scale * rng.standard_normal(n)
            total += 1
            if oracles.boundary_distance(sel.event, z) < boundary_tol:
                excluded += 1
                continue
            zsel = select_sparsity(assemble_cv(X, z, folds, S))
            if not zsel.event.contains(z):
                mismatches += 1
                continue
            member = sel.event.contains(z, slack=0.0)
            same = zsel.signature() == sig
            inside += member
            mismatches += member != same
    return CheckResult("event_rerun", mismatches, 0, mismatches == 0,
                       f"{total} resamples, {inside} inside, {excluded} near boundary")


@_timed
def check_slice_grid(events=100, grid=20_000, endpoint_tol=1e-6, seed=14) -> CheckResult:
    """Slice intervals against dense grid membership; endpoints must flip membership."""
    rng = np.random.default_rng(seed)
    ts = np.linspace(-50, 50, grid)
    bad_grid = 0
    worst_endpoint = 0.0
    for _ in range(events):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 8))
        base = rng.standard_normal(n)
        ev = oracles.random_feasible_event(rng, n, m, base)
        u = rng.standard_normal(n)
        sl = ev.slice(base, u)
        member = oracles.grid_membership(ev, base, u, ts)
        predicted = sl.contains_array(ts)
        ends = np.array([e for ivl in sl for e in ivl if math.isfinite(e)])
        if ends.size:
            near = np.min(np.abs(ts[:, None] - ends[None, :]), axis=1) < 1e-9
        else:
            near = np.zeros_like(member)
        bad_grid += int(np.sum((member != predicted) & ~near))
        for e in ends:
            pair = oracles.grid_membership(ev, base, u, [e - endpoint_tol, e + endpoint_tol])
            if pair[0] == pair[1]:
                # membership did not flip within tolerance: measure how far the true boundary is
                worst_endpoint = max(worst_endpoint, _endpoint_error(ev, base, u, e))
    measured = max(float(bad_grid), worst_endpoint)
    return CheckResult("slice_grid", measured, endpoint_tol,
                       bad_grid == 0 and worst_endpoint <= endpoint_tol,
                       f"{events} events, grid mismatches={bad_grid}, endpoint error={worst_endpoint:.2e}")


def _endpoint_error(ev, base, u, e, span=1e-3):
    ts = np.linspace(e - span, e + span, 20001)
    m = oracles.grid_membership(ev, base, u, ts)
    flips = ts[1:][m[1:] != m[:-1]]
    return float(np.min(np.abs(flips - e))) if flips.size else span


@_timed
def check_truncated_chi(cases=50, tol=1e-6, seed=15) -> CheckResult:
    """Truncated chi survival against quadrature, plus untruncated classical tails."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        df = int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        pts = np.sort(rng.uniform(0, 6, 2 * k))
        trunc = IntervalUnion(list(zip(pts[0::2], pts[1::2])))
        lo, hi = trunc.intervals[int(rng.integers(0, len(trunc)))]
        T = float(rng.uniform(lo, hi))
        got = truncated_chi_survival(T, df, trunc)
        ref = oracles.chi_survival_quadrature(T, df, trunc.intervals)
        worst = max(worst, abs(got - ref))
    for df in (1, 2, 3):
        for T in (0.1, 1.0, 1.959964, 3.0, 5.0):
            got = truncated_chi_survival(T, df, IntervalUnion([(0.0, math.inf)]))
            worst = max(worst, abs(got - float(stats.chi.sf(T, df))))
    return CheckResult("truncated_chi", worst, tol, worst <= tol, f"{cases} bounded cases")


@_timed
def check_null_uniformity(replications=500, max_d=0.08, seed=2016, n_jobs=1) -> CheckResult:
    """Global-null KS distance of pooled selective p-values (n=50, p=20, K=5, sigma known)."""
    cfg = SimConfig(n=50, p=20, K=5, sparsity=0, sigma=1.0, replications=replications, seed=seed)
    rows = run_simulation(cfg, n_jobs=n_jobs).rows
    pvals = np.array([r.p_value for r in rows])
    D = float(stats.kstest(pvals, "uniform").statistic)
    return CheckResult("null_ks_uniformity", D, max_d, D <= max_d,
                       f"{pvals.size} p-values from {replications} replications")


FAST = {
    "rss_identity": lambda: check_rss_identity(instances=10, probes=20),
    "selection_argmin": lambda: check_selection(instances=50),
    "event_rerun": lambda: check_event_rerun(instances=2, resamples=100),
    "slice_grid": lambda: check_slice_grid(events=20),
    "truncated_chi": lambda: check_truncated_chi(cases=20),
}


def self_check(level: str = "fast", n_jobs: int = 1) -> list:
    """Run the oracle suite; ``full`` adds the 500-replication null calibration."""
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    if level == "fast":
        return [fn() for fn in FAST.values()]
    return [
        check_rss_identity(),
        check_selection(),
        check_event_rerun(),
        check_slice_grid(),
        check_truncated_chi(),
        check_null_uniformity(n_jobs=n_jobs),
    ]
