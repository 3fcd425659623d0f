"""Brute-force reference computations used by the self-check and the test suite.

None of these reuse the quadratic-form machinery they are meant to check:
CV residuals are recomputed fold by fold with ``lstsq``, stepwise paths by
refitting every candidate model, slices by dense grid membership and chi
probabilities by numerical quadrature.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, stats

from ..cvquad import FoldAssignment, TIE_TOL, assemble_cv, select_sparsity


def lstsq_fit(X, y):
    if X.shape[1] == 0:
        return np.zeros(0)
    return np.linalg.lstsq(X, y, rcond=None)[0]


def greedy_stepwise(X, y, S):
    """Forward stepwise by exhaustive refits: add the column giving the smallest RSS."""
    n, p = X.shape
    active: list = []
    path = []
    for _ in range(S):
        best, best_rss = None, math.inf
        for j in range(p):
            if j in active:
                continue
            cols = active + [j]
            r = y - X[:, cols] @ lstsq_fit(X[:, cols], y)
            rss = float(r @ r)
            if rss < best_rss:
                best, best_rss = j, rss
        active = active + [best]
        path.append(active)
    return path


def direct_cv_rss(X, z, folds: FoldAssignment, fold_paths, sizes):
    """CV residual sum of squares of ``z`` with the per-fold active sets held fixed.

    ``fold_paths[f][k - 1]`` is the fold-``f`` active set of size ``k``.
    """
    out = []
    for k in sizes:
        total = 0.0
        for f in range(folds.K):
            tr, te = folds.train_idx(f), folds.test_idx(f)
            A = list(fold_paths[f][k - 1]) if k > 0 else []
            beta = lstsq_fit(X[np.ix_(tr, A)], z[tr])
            r = z[te] - X[np.ix_(te, A)] @ beta
            total += float(r @ r)
        out.append(total)
    return np.array(out)


def argmin_first(values, tol=TIE_TOL):
    values = np.asarray(values, dtype=float)
    best = values.min()
    return int(np.flatnonzero(values <= best + tol * max(1.0, abs(best)))[0])


def direct_cv_select(X, y, folds: FoldAssignment, S, penalty="none", include_null_model=False):
    """Model size chosen by plain CV: greedy paths per fold, direct RSS, first argmin."""
    paths = [greedy_stepwise(X[folds.train_idx(f)], y[folds.train_idx(f)], S)
             for f in range(folds.K)]
    sizes = np.arange(0 if include_null_model else 1, S + 1)
    rss = direct_cv_rss(X, y, folds, paths, sizes)
    if penalty == "bic":
        rss = rss + 2.0 * sizes * math.log(np.mean(folds.sizes))
    return int(sizes[argmin_first(rss)]), paths, rss


def pipeline_signature(X, z, folds, S, penalty="none", include_null_model=False,
                       refit_event=True):
    """Rerun the full selection on ``z``: (fold paths, chosen step, refit path)."""
    cvq = assemble_cv(X, z, folds, S, penalty=penalty, include_null_model=include_null_model)
    sel = select_sparsity(cvq, refit_event=refit_event)
    return sel.signature()


def grid_membership(event, base, direction, ts, slack=0.0):
    """Membership of ``base + t * direction`` in ``event`` for each ``t``."""
    alpha, beta, gamma = event.line_coefficients(base, direction)
    ts = np.asarray(ts)[:, None]
    vals = alpha[None, :] * ts ** 2 + beta[None, :] * ts + gamma[None, :]
    return np.all(vals >= -slack, axis=1)


def boundary_distance(event, z):
    """Smallest absolute constraint value at ``z``."""
    if len(event) == 0:
        return math.inf
    return float(np.min(np.abs(event.values(z))))


def chi_survival_quadrature(T, df, intervals):
    """Truncated chi survival by integrating the chi density directly."""
    pdf = lambda x: stats.chi.pdf(x, df)

    def mass(lo, hi):
        if hi <= lo:
            return 0.0
        val, _ = integrate.quad(pdf, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
        return val

    den = sum(mass(lo, hi) for lo, hi in intervals)
    num = sum(mass(max(lo, T), hi) for lo, hi in intervals)
    return num / den


def random_feasible_event(rng, n, m, base):
    """``m`` random quadratic constraints shifted so that ``base`` satisfies all of them."""
    from ..constraints import SelectionEvent

    Q = rng.standard_normal((m, n, n))
    Q = 0.5 * (Q + np.swapaxes(Q, 1, 2))
    a = rng.standard_normal((m, n))
    vals = (Q @ base) @ base + a @ base
    b = -vals + rng.uniform(0.1, 5.0, size=m)
    return SelectionEvent.from_arrays(Q, a, b, observed=base)
