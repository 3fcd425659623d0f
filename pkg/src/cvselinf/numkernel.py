"""Dense linear-algebra primitives: pseudoinverse, projections, quadratic forms and roots."""

from __future__ import annotations

import numpy as np

from .exceptions import ContractViolation, NumericalFailure
from .intervals import IntervalUnion

PINV_TOL = 1e-10
DEGENERACY_TOL = 1e-12
_TINY = np.finfo(float).tiny

# piece kinds returned by quadratic_pieces
ALL, EMPTY, INTERVAL, OUTSIDE = 0, 1, 2, 3


def pseudoinverse(A, tol=PINV_TOL):
    """Moore-Penrose pseudoinverse via SVD.

    Singular values at or below ``tol`` times the largest one are treated
    as zero, as are subnormal ones whose reciprocal would overflow. A
    matrix with zero columns (the empty model) maps to a ``(0, rows)`` matrix.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ContractViolation(f"pseudoinverse expects a 2-d matrix, got ndim={A.ndim}")
    if tol <= 0:
        raise ContractViolation("tol must be positive")
    if not np.all(np.isfinite(A)):
        raise ContractViolation("matrix entries must be finite")
    if A.size == 0:
        return np.zeros((A.shape[1], A.shape[0]))
    try:
        U, sv, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}", shape=A.shape) from exc
    cutoff = max(tol * sv[0], _TINY) if sv.size else _TINY
    keep = sv > cutoff
    inv = np.zeros_like(sv)
    inv[keep] = 1.0 / sv[keep]
    return (Vt.T * inv) @ U.T


def projector(A, tol=PINV_TOL):
    """Orthogonal projector onto the column span of ``A``."""
    A = np.asarray(A, dtype=float)
    if A.shape[1] == 0:
        return np.zeros((A.shape[0], A.shape[0]))
    return A @ pseudoinverse(A, tol)


def symmetrize(Q):
    Q = np.asarray(Q, dtype=float)
    return 0.5 * (Q + Q.T)


def quad_eval(Q, a, b, z):
    """Evaluate ``z' Q z + a' z + b``."""
    Q = np.asarray(Q, dtype=float)
    a = np.asarray(a, dtype=float)
    z = np.asarray(z, dtype=float)
    n = z.shape[0]
    if Q.shape != (n, n) or a.shape != (n,):
        raise ContractViolation(
            f"dimension mismatch: Q {Q.shape}, a {a.shape}, z {z.shape}"
        )
    return float(z @ Q @ z + a @ z + b)


def quadratic_pieces(alpha, beta, gamma, tol=DEGENERACY_TOL):
    """Classify ``{t : alpha t^2 + beta t + gamma >= 0}`` for arrays of coefficients.

    Returns ``(kind, lo, hi)``. ``kind`` is one of ``ALL``, ``EMPTY``,
    ``INTERVAL`` (the set ``[lo, hi]``) or ``OUTSIDE`` (the set
    ``(-inf, lo] U [hi, inf)``). Coefficients with magnitude at most
    ``tol`` are zeroed first.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float)).copy()
    beta = np.atleast_1d(np.asarray(beta, dtype=float)).copy()
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float)).copy()
    alpha[np.abs(alpha) <= tol] = 0.0
    beta[np.abs(beta) <= tol] = 0.0
    gamma[np.abs(gamma) <= tol] = 0.0

    m = alpha.shape[0]
    kind = np.full(m, ALL, dtype=np.int8)
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)

    const = (alpha == 0) & (beta == 0)
    kind[const & (gamma < 0)] = EMPTY

    with np.errstate(divide="ignore", invalid="ignore"):
        lin = (alpha == 0) & (beta != 0)
        root = -gamma / beta
        up = lin & (beta > 0)
        down = lin & (beta < 0)
        kind[up | down] = INTERVAL
        lo[up] = root[up]
        hi[down] = root[down]

        quad = alpha != 0
        disc = beta * beta - 4.0 * alpha * gamma
        sq = np.sqrt(np.where(disc > 0, disc, 0.0))
        # stable roots: q/alpha and gamma/q
        q = -0.5 * (beta + np.where(beta >= 0, 1.0, -1.0) * sq)
        r1 = q / alpha
        r2 = np.where(q != 0, gamma / np.where(q != 0, q, 1.0), r1)
        rlo = np.minimum(r1, r2)
        rhi = np.maximum(r1, r2)

    convex = quad & (alpha > 0)
    hole = convex & (disc > 0)
    kind[hole] = OUTSIDE
    lo[hole] = rlo[hole]
    hi[hole] = rhi[hole]

    concave = quad & (alpha < 0)
    kind[concave & (disc < 0)] = EMPTY
    cap = concave & (disc >= 0)
    kind[cap] = INTERVAL
    lo[cap] = rlo[cap]
    hi[cap] = rhi[cap]
    return kind, lo, hi


def intersect_pieces(kind, lo, hi):
    """Intersect the sets described by :func:`quadratic_pieces` output."""
    kind = np.asarray(kind)
    if np.any(kind == EMPTY):
        return IntervalUnion.empty()
    ivl = kind == INTERVAL
    left = float(lo[ivl].max()) if ivl.any() else -np.inf
    right = float(hi[ivl].min()) if ivl.any() else np.inf
    if left > right:
        return IntervalUnion.empty()
    out = kind == OUTSIDE
    h_lo, h_hi = lo[out], hi[out]
    keep = (h_hi > left) & (h_lo < right)
    h_lo, h_hi = h_lo[keep], h_hi[keep]
    order = np.argsort(h_lo, kind="stable")
    segments = []
    cur = left
    for a, b in zip(h_lo[order], h_hi[order]):
        if a >= cur:
            segments.append((cur, a))
        cur = max(cur, b)
        if cur > right:
            break
    if cur <= right:
        segments.append((cur, right))
    return IntervalUnion(segments)


def solve_quadratic_ineq(alpha, beta, gamma, tol=DEGENERACY_TOL):
    """Solve ``alpha t^2 + beta t + gamma >= 0`` as a union of closed intervals.

    >>> solve_quadratic_ineq(1.0, 0.0, -1.0)
    IntervalUnion([(-inf, -1.0), (1.0, inf)])
    """
    for c in (alpha, beta, gamma):
        if not np.isfinite(c):
            raise ContractViolation("quadratic coefficients must be finite")
    kind, lo, hi = quadratic_pieces(alpha, beta, gamma, tol)
    return intersect_pieces(kind, lo, hi)
