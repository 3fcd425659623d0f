"""Finite unions of closed intervals on the extended real line."""

from __future__ import annotations

import math
from typing import Iterable, Sequence, Tuple

import numpy as np

MERGE_TOL = 1e-10

Interval = Tuple[float, float]


def _normalize(intervals: Iterable[Interval], merge_tol: float) -> tuple:
    cleaned = []
    for lo, hi in intervals:
        lo, hi = float(lo), float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            continue
        cleaned.append((lo, hi))
    cleaned.sort()
    merged = []
    for lo, hi in cleaned:
        if merged and lo <= merged[-1][1] + merge_tol:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return tuple(merged)


class IntervalUnion:
    """Sorted, disjoint union of closed intervals.

    Endpoints may be ``-inf``/``inf``. Intervals whose gap is at most
    ``merge_tol`` are merged on construction, so repeated roots coming from
    near-tied models do not leave slivers behind.

    Examples
    --------
    >>> IntervalUnion([(1, 2), (-1, 0.5), (2, 3)])
    IntervalUnion([(-1.0, 0.5), (1.0, 3.0)])
    """

    __slots__ = ("_intervals",)

    def __init__(self, intervals: Iterable[Interval] = (), merge_tol: float = MERGE_TOL):
        self._intervals = _normalize(intervals, merge_tol)

    @classmethod
    def real_line(cls) -> "IntervalUnion":
        return cls([(-math.inf, math.inf)])

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls()

    @property
    def intervals(self) -> tuple:
        return self._intervals

    def __iter__(self):
        return iter(self._intervals)

    def __len__(self):
        return len(self._intervals)

    def __bool__(self):
        return bool(self._intervals)

    def __eq__(self, other):
        if not isinstance(other, IntervalUnion):
            return NotImplemented
        return self._intervals == other._intervals

    def __hash__(self):
        return hash(self._intervals)

    def __repr__(self):
        return f"IntervalUnion({list(self._intervals)!r})"

    def is_empty(self) -> bool:
        return not self._intervals

    def contains(self, t: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= t <= hi + tol for lo, hi in self._intervals)

    def contains_array(self, t: np.ndarray) -> np.ndarray:
        """Vectorised membership test."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=bool)
        for lo, hi in self._intervals:
            out |= (t >= lo) & (t <= hi)
        return out

    def measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self._intervals))

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        a, b = self._intervals, other._intervals
        i = j = 0
        out = []
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalUnion(out)

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(self._intervals + other._intervals)

    def clip(self, lo: float = -math.inf, hi: float = math.inf) -> "IntervalUnion":
        return self.intersect(IntervalUnion([(lo, hi)]))

    def shift(self, offset: float) -> "IntervalUnion":
        return IntervalUnion([(lo + offset, hi + offset) for lo, hi in self._intervals], merge_tol=0.0)

    def scale(self, factor: float) -> "IntervalUnion":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return IntervalUnion([(lo * factor, hi * factor) for lo, hi in self._intervals], merge_tol=0.0)

    def drop_narrow(self, min_width: float, keep: float | None = None) -> "IntervalUnion":
        """Remove intervals narrower than ``min_width``, except one containing ``keep``."""
        kept = [
            (lo, hi)
            for lo, hi in self._intervals
            if hi - lo >= min_width or (keep is not None and lo <= keep <= hi)
        ]
        return IntervalUnion(kept, merge_tol=0.0)

    def to_list(self) -> list:
        """JSON-friendly form; infinities become the strings ``"-inf"``/``"inf"``."""

        def enc(v):
            return str(v) if math.isinf(v) else v

        return [[enc(lo), enc(hi)] for lo, hi in self._intervals]


def intersect_all(unions: Sequence[IntervalUnion]) -> IntervalUnion:
    result = IntervalUnion.real_line()
    for u in unions:
        result = result.intersect(u)
        if result.is_empty():
            break
    return result
