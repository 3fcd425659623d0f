"""Cross-validated test error as a quadratic form in the response.

For a fixed set of per-fold stepwise models, the K-fold CV residual sum of
squares at each candidate sparsity is ``||y||^2 + y_K' Q^s y_K`` where
``y_K`` is ``y`` reordered fold by fold. Choosing the sparsity that
minimises it is therefore a set of homogeneous quadratic inequalities, and
together with the per-fold stepwise constraints (and those of the final
full-data refit) it describes the whole selection event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .constraints import SelectionEvent
from .exceptions import ContractViolation
from .numkernel import PINV_TOL
from .rng import Stream
from .stepwise import StepwisePath, fit_stepwise, hat_matrix

TIE_TOL = 1e-12
PENALTIES = ("none", "bic")


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    """Partition of ``n`` observations into ``K`` nonempty folds.

    ``permutation`` lists the observations of fold 0 first, then fold 1 and
    so on, each block in ascending index order, so ``y_K = y[permutation]``.
    """

    fold_of: np.ndarray
    K: int
    scheme: str = "given"
    seed: Optional[int] = None

    def __post_init__(self):
        fold_of = np.asarray(self.fold_of)
        if fold_of.ndim != 1 or fold_of.size == 0:
            raise ContractViolation("fold_of must be a nonempty 1-d sequence")
        if not np.issubdtype(fold_of.dtype, np.integer):
            if not np.all(fold_of == np.round(fold_of)):
                raise ContractViolation("fold labels must be integers")
        fold_of = fold_of.astype(np.intp)
        if fold_of.min() < 0 or fold_of.max() >= self.K:
            raise ContractViolation(f"fold labels must lie in [0, {self.K})")
        counts = np.bincount(fold_of, minlength=self.K)
        if np.any(counts == 0):
            raise ContractViolation(f"folds {np.flatnonzero(counts == 0).tolist()} are empty")
        fold_of.flags.writeable = False
        object.__setattr__(self, "fold_of", fold_of)

    @classmethod
    def round_robin(cls, n: int, K: int) -> "FoldAssignment":
        if not 1 <= K <= n:
            raise ContractViolation(f"need 1 <= K <= n, got K={K}, n={n}")
        return cls(np.arange(n) % K, K, scheme="round_robin")

    @classmethod
    def shuffled(cls, n: int, K: int, seed: int) -> "FoldAssignment":
        """Round-robin over a seeded random permutation of the observations."""
        if not 1 <= K <= n:
            raise ContractViolation(f"need 1 <= K <= n, got K={K}, n={n}")
        order = Stream(seed, 0).permutation(n)
        fold_of = np.empty(n, dtype=np.intp)
        fold_of[order] = np.arange(n) % K
        return cls(fold_of, K, scheme="shuffled", seed=int(seed))

    @property
    def n(self) -> int:
        return self.fold_of.shape[0]

    @property
    def blocks(self) -> list:
        return [np.flatnonzero(self.fold_of == f) for f in range(self.K)]

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.K)

    @property
    def permutation(self) -> np.ndarray:
        return np.argsort(self.fold_of, kind="stable")

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)])

    def test_idx(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == f)

    def train_idx(self, f: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != f)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "scheme": self.scheme,
            "seed": self.seed,
            "fold_of": self.fold_of.tolist(),
        }


def bic_penalties(sizes, test_size: float) -> np.ndarray:
    """``2 |m| log(test_size)`` for each model size."""
    return 2.0 * np.asarray(sizes, dtype=float) * math.log(test_size)


@dataclass(frozen=True, eq=False)
class CvQuadratic:
    """Quadratic forms ``Q^s`` (fold order) for every candidate model size.

    ``sizes[i]`` is the model size whose form is ``Q_by_s[i]``; the step
    index reported elsewhere is ``size - 1``.
    """

    Q_by_s: np.ndarray
    sizes: np.ndarray
    penalties: np.ndarray
    folds: FoldAssignment
    paths: List[StepwisePath]
    X: np.ndarray
    y: np.ndarray
    S: int
    S_requested: int
    penalty: str = "none"

    @property
    def truncated(self) -> bool:
        return self.S < self.S_requested

    @property
    def n(self) -> int:
        return self.folds.n

    def quadratic_terms(self, z) -> np.ndarray:
        """``z_K' Q^s z_K`` for every candidate."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n,):
            raise ContractViolation(f"response has shape {z.shape}, expected ({self.n},)")
        zk = z[self.folds.permutation]
        return np.einsum("i,sij,j->s", zk, self.Q_by_s, zk)

    def cv_rss(self, z) -> np.ndarray:
        """CV residual sum of squares of ``z`` at every candidate, fold models held fixed."""
        z = np.asarray(z, dtype=float)
        return float(z @ z) + self.quadratic_terms(z)

    def criterion(self, z) -> np.ndarray:
        return self.quadratic_terms(z) + self.penalties


def _fold_hat_blocks(path, X, folds, f, s):
    """Column blocks ``(P_{f,s})_g`` of the fold-``f`` hat matrix, keyed by ``g``."""
    P = hat_matrix(path, X[folds.test_idx(f)], s)
    train = folds.train_idx(f)
    blocks = {}
    for g in range(folds.K):
        if g != f:
            blocks[g] = P[:, np.searchsorted(train, folds.test_idx(g))]
    return blocks


def assemble_quadratic(blocks, folds: FoldAssignment) -> np.ndarray:
    """Assemble ``Q^s`` in fold order from the hat-matrix column blocks.

    ``blocks[f][g]`` is ``(P_{f,s})_g``. Diagonal blocks collect the squared
    predictions from every other fold's model; off-diagonal blocks add the
    cross terms of the expanded residual sum of squares.
    """
    K = folds.K
    off = folds.offsets
    n = folds.n
    Q = np.zeros((n, n))
    for f in range(K):
        rf = slice(off[f], off[f + 1])
        for g in range(K):
            rg = slice(off[g], off[g + 1])
            if f == g:
                acc = np.zeros((folds.sizes[f], folds.sizes[f]))
                for h in range(K):
                    if h != f:
                        acc += blocks[h][f].T @ blocks[h][f]
            else:
                acc = -blocks[f][g] - blocks[g][f].T
                for h in range(K):
                    if h != f and h != g:
                        acc += blocks[h][f].T @ blocks[h][g]
            Q[rf, rg] = acc
    return 0.5 * (Q + Q.T)


def assemble_cv(X, y, folds: FoldAssignment, S: int, penalty: str = "none",
                include_null_model: bool = False, pinv_tol: float = PINV_TOL) -> CvQuadratic:
    """Fit one stepwise path per training set and build the CV quadratic forms.

    If some training set runs out of candidates before ``S`` steps, ``S``
    is cut to the shortest path for every fold (see ``CvQuadratic.truncated``).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ContractViolation(f"incompatible shapes X {X.shape}, y {y.shape}")
    if folds.n != X.shape[0]:
        raise ContractViolation(f"fold assignment covers {folds.n} rows, data has {X.shape[0]}")
    if penalty not in PENALTIES:
        raise ContractViolation(f"penalty must be one of {PENALTIES}, got {penalty!r}")
    if folds.K < 2:
        raise ContractViolation("cross-validation needs at least two folds")
    S = int(S)
    max_feasible = min(min(folds.n - sz for sz in folds.sizes), X.shape[1])
    if not 1 <= S <= max_feasible:
        raise ContractViolation(f"S={S} must lie in [1, {max_feasible}] for this design and folds")

    paths = [
        fit_stepwise(X[folds.train_idx(f)], y[folds.train_idx(f)], S, pinv_tol=pinv_tol)
        for f in range(folds.K)
    ]
    S_eff = min(p.n_steps for p in paths)
    if S_eff == 0:
        raise ContractViolation("no training fold admits a single stepwise step")
    if S_eff < S:
        paths = [p.truncated(S_eff) for p in paths]

    sizes = np.arange(0 if include_null_model else 1, S_eff + 1)
    Qs = np.empty((sizes.size, folds.n, folds.n))
    for i, size in enumerate(sizes):
        blocks = [_fold_hat_blocks(paths[f], X, folds, f, size - 1) for f in range(folds.K)]
        Qs[i] = assemble_quadratic(blocks, folds)

    if penalty == "bic":
        pens = bic_penalties(sizes, float(np.mean(folds.sizes)))
    else:
        pens = np.zeros(sizes.size)
    return CvQuadratic(
        Q_by_s=Qs,
        sizes=sizes,
        penalties=pens,
        folds=folds,
        paths=paths,
        X=X,
        y=y,
        S=S_eff,
        S_requested=S,
        penalty=penalty,
    )


def _argmin_with_ties(values, tol=TIE_TOL):
    values = np.asarray(values, dtype=float)
    best = float(values.min())
    near = np.flatnonzero(values <= best + tol * max(1.0, abs(best)))
    return int(near[0]), bool(near.size > 1)


@dataclass(frozen=True, eq=False)
class CvSelection:
    """Chosen sparsity, final active set and the full conditioning event.

    ``s_hat`` is the step index, i.e. ``model_size - 1`` (``-1`` for the
    empty model).
    """

    s_hat: int
    model_size: int
    event: SelectionEvent
    active_set: list
    criterion: np.ndarray
    sizes: np.ndarray
    tie: bool
    kind: str
    cvq: Optional[CvQuadratic] = None
    full_path: Optional[StepwisePath] = None
    train_path: Optional[StepwisePath] = None
    refit_event: bool = True
    n_comparisons: int = 0
    meta: dict = field(default_factory=dict)

    def signature(self) -> tuple:
        """Everything the event conditions on, as a hashable tuple."""
        if self.kind == "cv":
            fold_models = tuple(tuple(map(tuple, p.active_sets)) for p in self.cvq.paths)
        else:
            fold_models = (tuple(map(tuple, self.train_path.active_sets)),)
        refit = tuple(map(tuple, self.full_path.active_sets)) if self.full_path is not None else ()
        return fold_models, self.s_hat, refit


def select_sparsity(cvq: CvQuadratic, y=None, refit_event: bool = True) -> CvSelection:
    """Minimise the penalised CV criterion and build the selection event.

    The event holds, in order: one comparison constraint for every
    candidate other than the winner, the stepwise constraints of every
    training fold, and (unless ``refit_event`` is false) the stepwise
    constraints of the final full-data fit to the chosen size.
    """
    y = cvq.y if y is None else np.asarray(y, dtype=float)
    n = cvq.n
    if y.shape != (n,):
        raise ContractViolation(f"response has shape {y.shape}, expected ({n},)")
    if y is not cvq.y and not np.array_equal(y, cvq.y):
        raise ContractViolation("the fold models were fitted to a different response")
    crit = cvq.criterion(y)
    best, tie = _argmin_with_ties(crit)
    model_size = int(cvq.sizes[best])

    others = [r for r in range(cvq.sizes.size) if r != best]
    comp = SelectionEvent.from_arrays(
        cvq.Q_by_s[others] - cvq.Q_by_s[best][None, :, :],
        b=cvq.penalties[others] - cvq.penalties[best],
        symmetric=True,
    ).embed(cvq.folds.permutation, n)

    parts = [comp]
    for f, path in enumerate(cvq.paths):
        parts.append(path.event.embed(cvq.folds.train_idx(f), n))

    full_path = fit_stepwise(cvq.X, y, model_size, pinv_tol=cvq.paths[0].pinv_tol)
    if full_path.short:
        raise ContractViolation(f"full-data stepwise could not reach {model_size} steps")
    if refit_event:
        parts.append(full_path.event)
    event = parts[0].concat(*parts[1:])
    event.assert_contains(y)

    return CvSelection(
        s_hat=model_size - 1,
        model_size=model_size,
        event=event,
        active_set=list(full_path.active_sets[-1]) if model_size else [],
        criterion=crit,
        sizes=cvq.sizes,
        tie=tie,
        kind="cv",
        cvq=cvq,
        full_path=full_path,
        refit_event=refit_event,
        n_comparisons=len(others),
        meta={"S": cvq.S, "S_requested": cvq.S_requested, "truncated": cvq.truncated},
    )


def split_event(X, y, train_idx, S: int, penalty: str = "none",
                pinv_tol: float = PINV_TOL) -> CvSelection:
    """Selection event for a single train/test split.

    The path is fit on the training rows; the sparsity minimising the test
    RSS (plus penalty) is chosen and the model at that step is reported.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if y.shape != (n,):
        raise ContractViolation(f"incompatible shapes X {X.shape}, y {y.shape}")
    train = np.asarray(train_idx, dtype=np.intp)
    if train.size and (train.min() < 0 or train.max() >= n):
        raise ContractViolation("train indices out of range")
    if np.unique(train).size != train.size:
        raise ContractViolation("train indices must be distinct")
    mask = np.zeros(n, dtype=bool)
    mask[train] = True
    test = np.flatnonzero(~mask)
    if train.size == 0 or test.size == 0:
        raise ContractViolation("both training and test sets must be nonempty")
    if penalty not in PENALTIES:
        raise ContractViolation(f"penalty must be one of {PENALTIES}, got {penalty!r}")

    path = fit_stepwise(X[train], y[train], S, pinv_tol=pinv_tol)
    S_eff = path.n_steps
    if S_eff == 0:
        raise ContractViolation("training set admits no stepwise step")
    hats = [hat_matrix(path, X[test], s) for s in range(S_eff)]
    y_tr, y_te = y[train], y[test]
    rss = np.array([np.sum((y_te - P @ y_tr) ** 2) for P in hats])
    sizes = np.arange(1, S_eff + 1)
    pens = bic_penalties(sizes, test.size) if penalty == "bic" else np.zeros(S_eff)
    crit = rss + pens
    best, tie = _argmin_with_ties(crit)

    n_tr, n_te = train.size, test.size
    Ps = hats[best]
    blocks = []
    bs = []
    for r in range(S_eff):
        if r == best:
            continue
        Pr = hats[r]
        M = np.zeros((n, n))
        M[:n_tr, :n_tr] = Pr.T @ Pr - Ps.T @ Ps
        M[:n_tr, n_tr:] = (Ps - Pr).T
        M[n_tr:, :n_tr] = Ps - Pr
        blocks.append(M)
        bs.append(pens[r] - pens[best])
    if blocks:
        comp = SelectionEvent.from_arrays(np.stack(blocks), b=np.array(bs), symmetric=True)
    else:
        comp = SelectionEvent.from_arrays(np.zeros((0, n, n)))
    comp = comp.embed(np.concatenate([train, test]), n)
    event = comp.concat(path.event.embed(train, n))
    event.assert_contains(y)
    return CvSelection(
        s_hat=best,
        model_size=best + 1,
        event=event,
        active_set=list(path.active_sets[best]),
        criterion=crit,
        sizes=sizes,
        tie=tie,
        kind="split",
        train_path=path,
        n_comparisons=len(blocks),
        meta={"S": S_eff, "S_requested": int(S), "truncated": S_eff < S,
              "train_idx": train.tolist()},
    )
