"""Selection events as conjunctions of quadratic inequalities, and their line slices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ContractViolation, InconsistentEventError
from .intervals import IntervalUnion, intersect_all
from .numkernel import (
    DEGENERACY_TOL,
    intersect_pieces,
    quad_eval,
    quadratic_pieces,
    symmetrize,
)

FEASIBILITY_SLACK = 1e-8

__all__ = [
    "QuadraticConstraint",
    "SelectionEvent",
    "IntervalUnion",
    "intersect_all",
    "contains",
    "embed",
    "slice_event",
]


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class QuadraticConstraint:
    """The set ``{z : z' Q z + a' z + b >= 0}``. ``Q`` is symmetrised on construction."""

    Q: np.ndarray
    a: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ContractViolation(f"Q must be square, got shape {Q.shape}")
        a = np.asarray(self.a, dtype=float)
        if a.shape != (Q.shape[0],):
            raise ContractViolation(f"a has shape {a.shape}, expected ({Q.shape[0]},)")
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(a)) and np.isfinite(self.b)):
            raise ContractViolation("constraint coefficients must be finite")
        object.__setattr__(self, "Q", _frozen(symmetrize(Q)))
        object.__setattr__(self, "a", _frozen(a))
        object.__setattr__(self, "b", float(self.b))

    @classmethod
    def homogeneous(cls, Q):
        """A pure quadratic form ``z' Q z >= 0``."""
        Q = np.asarray(Q, dtype=float)
        return cls(Q, np.zeros(Q.shape[0]), 0.0)

    @property
    def dimension(self) -> int:
        return self.Q.shape[0]

    def evaluate(self, z) -> float:
        return quad_eval(self.Q, self.a, self.b, z)


class SelectionEvent:
    """Intersection of quadratic constraints on the response vector.

    Constraints are stored stacked (``Q`` has shape ``(m, n, n)``) so that
    membership tests and line slices are vectorised. Passing ``observed``
    asserts that the response which produced the event lies inside it.
    """

    def __init__(self, constraints: Sequence[QuadraticConstraint] = (), dimension=None,
                 observed=None, slack=FEASIBILITY_SLACK):
        constraints = list(constraints)
        if dimension is None:
            if not constraints:
                raise ContractViolation("dimension is required for an event with no constraints")
            dimension = constraints[0].dimension
        n = int(dimension)
        for c in constraints:
            if c.dimension != n:
                raise ContractViolation(
                    f"constraint of dimension {c.dimension} in an event of dimension {n}"
                )
        if constraints:
            Q = np.stack([c.Q for c in constraints])
            a = np.stack([c.a for c in constraints])
            b = np.array([c.b for c in constraints])
        else:
            Q, a, b = np.zeros((0, n, n)), np.zeros((0, n)), np.zeros(0)
        self._set(Q, a, b, symmetric=True)
        if observed is not None:
            self.assert_contains(observed, slack)

    @classmethod
    def from_arrays(cls, Q, a=None, b=None, observed=None, slack=FEASIBILITY_SLACK,
                    symmetric=False):
        """Build from stacked arrays; ``a`` and ``b`` default to zero."""
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 3 or Q.shape[1] != Q.shape[2]:
            raise ContractViolation(f"stacked Q must have shape (m, n, n), got {Q.shape}")
        m, n = Q.shape[0], Q.shape[1]
        a = np.zeros((m, n)) if a is None else np.asarray(a, dtype=float)
        b = np.zeros(m) if b is None else np.asarray(b, dtype=float)
        if a.shape != (m, n) or b.shape != (m,):
            raise ContractViolation("stacked a/b shapes do not match Q")
        ev = cls.__new__(cls)
        ev._set(Q, a, b, symmetric=symmetric)
        if observed is not None:
            ev.assert_contains(observed, slack)
        return ev

    def _set(self, Q, a, b, symmetric):
        if not symmetric:
            Q = 0.5 * (Q + np.swapaxes(Q, 1, 2))
        self._Q = _frozen(Q)
        self._a = _frozen(a)
        self._b = _frozen(b)

    @property
    def Q(self):
        return self._Q

    @property
    def a(self):
        return self._a

    @property
    def b(self):
        return self._b

    @property
    def dimension(self) -> int:
        return self._Q.shape[1]

    @property
    def constraints(self) -> list:
        return [QuadraticConstraint(Q, a, b) for Q, a, b in zip(self._Q, self._a, self._b)]

    def __len__(self):
        return self._Q.shape[0]

    def __repr__(self):
        return f"SelectionEvent(n_constraints={len(self)}, dimension={self.dimension})"

    def __add__(self, other: "SelectionEvent") -> "SelectionEvent":
        return self.concat(other)

    def concat(self, *others: "SelectionEvent") -> "SelectionEvent":
        events = (self,) + others
        for ev in others:
            if ev.dimension != self.dimension:
                raise ContractViolation("cannot concatenate events of different dimension")
        return SelectionEvent.from_arrays(
            np.concatenate([e.Q for e in events]),
            np.concatenate([e.a for e in events]),
            np.concatenate([e.b for e in events]),
            symmetric=True,
        )

    def _check_vector(self, z, name="z"):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dimension,):
            raise ContractViolation(f"{name} has shape {z.shape}, expected ({self.dimension},)")
        return z

    def values(self, z) -> np.ndarray:
        """Value of every constraint at ``z`` (non-negative means satisfied)."""
        z = self._check_vector(z)
        return (self._Q @ z) @ z + self._a @ z + self._b

    def contains(self, z, slack=FEASIBILITY_SLACK) -> bool:
        if len(self) == 0:
            self._check_vector(z)
            return True
        return bool(np.all(self.values(z) >= -slack))

    def assert_contains(self, z, slack=FEASIBILITY_SLACK):
        # slack is scaled by ||z||^2 because every form here is quadratic in z
        z = self._check_vector(z, "observed")
        if len(self) == 0:
            return
        vals = self.values(z)
        tol = slack * max(1.0, float(z @ z))
        worst = int(np.argmin(vals))
        if vals[worst] < -tol:
            raise InconsistentEventError(
                f"observed response violates constraint {worst} by {-vals[worst]:.3e}"
            )

    def line_coefficients(self, base, direction):
        """Coefficients ``(alpha, beta, gamma)`` of each constraint along ``base + t*direction``."""
        base = self._check_vector(base, "base")
        u = self._check_vector(direction, "direction")
        Qu = self._Q @ u
        alpha = Qu @ u
        beta = 2.0 * (Qu @ base) + self._a @ u
        gamma = (self._Q @ base) @ base + self._a @ base + self._b
        return alpha, beta, gamma

    def slice(self, base, direction, tol=DEGENERACY_TOL, check_base=True,
              slack=FEASIBILITY_SLACK) -> IntervalUnion:
        """Set of ``t`` with ``base + t*direction`` inside the event.

        With ``check_base`` (the default) a base point that violates some
        constraint by more than ``slack`` raises :class:`InconsistentEventError`.
        """
        direction = self._check_vector(direction, "direction")
        if not np.any(direction):
            raise ContractViolation("direction must be nonzero")
        if len(self) == 0:
            self._check_vector(base, "base")
            return IntervalUnion.real_line()
        alpha, beta, gamma = self.line_coefficients(base, direction)
        if check_base:
            worst = float(gamma.min())
            if worst < -slack:
                raise InconsistentEventError(
                    f"base point violates constraint {int(np.argmin(gamma))} by {-worst:.3e}"
                )
            # a feasible base always keeps t=0, even when gamma is rounded slightly negative
            gamma = np.maximum(gamma, 0.0)
        kind, lo, hi = quadratic_pieces(alpha, beta, gamma, tol)
        return intersect_pieces(kind, lo, hi)

    def embed(self, index_map, n_full) -> "SelectionEvent":
        """Scatter every constraint into ``n_full`` coordinates at ``index_map``."""
        idx = _check_index_map(index_map, self.dimension, n_full)
        m = len(self)
        Q = np.zeros((m, n_full, n_full))
        Q[:, idx[:, None], idx[None, :]] = self._Q
        a = np.zeros((m, n_full))
        a[:, idx] = self._a
        return SelectionEvent.from_arrays(Q, a, self._b.copy(), symmetric=True)


def _check_index_map(index_map, n_sub, n_full):
    idx = np.asarray(index_map)
    if idx.ndim != 1 or idx.shape[0] != n_sub:
        raise ContractViolation(f"index_map must list {n_sub} positions")
    if idx.size and not np.issubdtype(idx.dtype, np.integer):
        raise ContractViolation("index_map entries must be integers")
    idx = idx.astype(np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= n_full):
        raise ContractViolation(f"index_map entries must lie in [0, {n_full})")
    if np.unique(idx).size != idx.size:
        raise ContractViolation("index_map positions must be distinct")
    return idx


def embed(constraint: QuadraticConstraint, index_map, n_full) -> QuadraticConstraint:
    """Lift a constraint on a sub-vector into ``n_full`` coordinates (zero padding)."""
    idx = _check_index_map(index_map, constraint.dimension, n_full)
    Q = np.zeros((n_full, n_full))
    Q[np.ix_(idx, idx)] = constraint.Q
    a = np.zeros(n_full)
    a[idx] = constraint.a
    return QuadraticConstraint(Q, a, constraint.b)


def contains(event: SelectionEvent, z, slack=FEASIBILITY_SLACK) -> bool:
    return event.contains(z, slack)


def slice_event(event: SelectionEvent, base, direction, **kwargs) -> IntervalUnion:
    return event.slice(base, direction, **kwargs)
