"""Forward stepwise regression that records its own selection event.

At each step the entering variable maximises ``||P_{j|A} y||^2``, the squared
norm of the projection of ``y`` onto the active-set-residualised column
``x_j``. Beating every other live candidate ``i`` is the homogeneous
quadratic inequality ``y' (P_{j|A} - P_{i|A}) y >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import List

import numpy as np

from .constraints import QuadraticConstraint, SelectionEvent
from .exceptions import ContractViolation
from .numkernel import PINV_TOL, pseudoinverse

COLUMN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StepwisePath:
    """Result of :func:`fit_stepwise`.

    ``active_sets[s]`` holds the ``s + 1`` variables in entry order.
    ``short`` is set when candidates ran out before ``max_steps``.
    """

    active_sets: List[list]
    coefficients: List[np.ndarray]
    X: np.ndarray
    y: np.ndarray
    max_steps: int
    short: bool = False
    # per step: unit direction of the winner and of every live loser
    _winner_dirs: List[np.ndarray] = field(default_factory=list, repr=False)
    _loser_dirs: List[np.ndarray] = field(default_factory=list, repr=False)
    pinv_tol: float = PINV_TOL

    @property
    def n_train(self) -> int:
        return self.X.shape[0]

    @property
    def n_steps(self) -> int:
        return len(self.active_sets)

    def active_set(self, s: int) -> list:
        """Variables of the model after ``s + 1`` steps; ``s = -1`` is the empty model."""
        if s == -1:
            return []
        if not 0 <= s < self.n_steps:
            raise ContractViolation(f"step {s} outside [0, {self.n_steps})")
        return self.active_sets[s]

    @cached_property
    def event(self) -> SelectionEvent:
        """All entry constraints, stacked, over the training response."""
        n = self.n_train
        blocks = []
        for w, losers in zip(self._winner_dirs, self._loser_dirs):
            if losers.shape[0] == 0:
                continue
            Qw = np.outer(w, w)
            blocks.append(Qw[None, :, :] - np.einsum("ki,kj->kij", losers, losers))
        Q = np.concatenate(blocks) if blocks else np.zeros((0, n, n))
        return SelectionEvent.from_arrays(Q, symmetric=True)

    @property
    def constraints(self) -> list:
        return self.event.constraints

    def truncated(self, n_steps: int) -> "StepwisePath":
        """The same path cut to its first ``n_steps`` steps, with only those steps' constraints."""
        if not 0 <= n_steps <= self.n_steps:
            raise ContractViolation(f"cannot truncate a {self.n_steps}-step path to {n_steps}")
        return StepwisePath(
            active_sets=self.active_sets[:n_steps],
            coefficients=self.coefficients[:n_steps],
            X=self.X,
            y=self.y,
            max_steps=n_steps,
            short=False,
            _winner_dirs=self._winner_dirs[:n_steps],
            _loser_dirs=self._loser_dirs[:n_steps],
            pinv_tol=self.pinv_tol,
        )

    def rss(self, s: int) -> float:
        A = self.active_set(s)
        r = self.y - self.X[:, A] @ self.coefficients[s] if A else self.y
        return float(r @ r)


def fit_stepwise(X, y, S, col_tol=COLUMN_TOL, pinv_tol=PINV_TOL) -> StepwisePath:
    """Run ``S`` steps of forward stepwise with least-squares refits.

    Parameters
    ----------
    X : ndarray of shape (n, p)
    y : ndarray of shape (n,)
    S : int
        Number of steps, at most ``min(n, p)``.
    col_tol : float
        A candidate whose residualised column has norm at most
        ``col_tol * ||x_i||`` is dropped for this and all later steps.

    Returns
    -------
    StepwisePath
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ContractViolation(f"incompatible shapes X {X.shape}, y {y.shape}")
    n, p = X.shape
    S = int(S)
    if S < 0 or S > min(n, p):
        raise ContractViolation(f"S={S} must lie in [0, min(n, p)={min(n, p)}]")
    col_norms = np.linalg.norm(X, axis=0)
    if np.any(col_norms == 0):
        raise ContractViolation(f"columns {np.flatnonzero(col_norms == 0).tolist()} are identically zero")

    V = X.copy()
    live = np.ones(p, dtype=bool)
    active: list = []
    active_sets, coefs, winners, losers = [], [], [], []
    for _ in range(S):
        norms = np.linalg.norm(V, axis=0)
        live &= norms > col_tol * col_norms
        if not live.any():
            break
        scores = np.full(p, -np.inf)
        scores[live] = (V[:, live].T @ y) ** 2 / norms[live] ** 2
        j = int(np.argmax(scores))  # first index wins exact ties
        eta = V[:, j] / norms[j]
        others = np.flatnonzero(live & (np.arange(p) != j))
        winners.append(eta)
        losers.append((V[:, others] / norms[others]).T)

        active = active + [j]
        active_sets.append(active)
        coefs.append(pseudoinverse(X[:, active], pinv_tol) @ y)

        live[j] = False
        # deflate twice for orthogonality
        for _ in range(2):
            V -= np.outer(eta, eta @ V)
    return StepwisePath(
        active_sets=active_sets,
        coefficients=coefs,
        X=X,
        y=y,
        max_steps=S,
        short=len(active_sets) < S,
        _winner_dirs=winners,
        _loser_dirs=losers,
        pinv_tol=pinv_tol,
    )


def hat_matrix(path: StepwisePath, X_new, s: int) -> np.ndarray:
    """Map from the training response to predictions at ``X_new`` after ``s + 1`` steps.

    ``s = -1`` gives the empty model (a zero matrix).
    """
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim != 2 or X_new.shape[1] != path.X.shape[1]:
        raise ContractViolation(
            f"X_new must have {path.X.shape[1]} columns, got shape {X_new.shape}"
        )
    A = path.active_set(s)
    if not A:
        return np.zeros((X_new.shape[0], path.n_train))
    return X_new[:, A] @ pseudoinverse(path.X[:, A], path.pinv_tol)
