"""Truncated chi tests for coefficients of a selected model."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special, stats

from .cvquad import CvSelection
from .exceptions import ContractViolation, InconsistentEventError, InsufficientDofError
from .intervals import IntervalUnion
from .numkernel import projector

NARROW_TOL = 1e-10
_LOG2 = math.log(2.0)
SIGMA_METHODS = ("full_model_residual",)


@dataclass(frozen=True, eq=False)
class SelectiveTestResult:
    """Outcome of one selective test.

    ``truncation`` lives on the statistic's own (chi) scale.
    """

    variable: int
    statistic: float
    df: int
    sigma: float
    truncation: IntervalUnion
    p_value: float
    sigma_source: str
    naive_p_value: float

    def to_dict(self) -> dict:
        return {
            "variable": self.variable,
            "statistic": self.statistic,
            "df": self.df,
            "sigma": self.sigma,
            "sigma_source": self.sigma_source,
            "p_value": self.p_value,
            "naive_p_value": self.naive_p_value,
            "truncation": self.truncation.to_list(),
        }


def _asymptotic_log_upper_gamma(a, z):
    # log Gamma(a, z) / Gamma(a) for large z
    series = 1.0
    term = 1.0
    for k in range(1, 6):
        term *= (a - k) / z
        series += term
    return (a - 1.0) * math.log(z) - z - math.lgamma(a) + math.log(series)


def chi_logsf(x: float, df: int) -> float:
    """Log survival function of the chi distribution, finite for every finite ``x``."""
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return -math.inf
    if df == 1:
        return _LOG2 + float(special.log_ndtr(-x))
    val = float(stats.chi2.logsf(x * x, df))
    if not math.isfinite(val):
        val = _asymptotic_log_upper_gamma(df / 2.0, x * x / 2.0)
    return val


def chi_logcdf(x: float, df: int) -> float:
    if x <= 0:
        return -math.inf
    if math.isinf(x):
        return 0.0
    if df == 1:
        r = x / math.sqrt(2.0)
        return math.log(special.erf(r)) if x < 1.0 else math.log1p(-special.erfc(r))
    return float(stats.chi2.logcdf(x * x, df))


def _log_diff(big, small):
    # log(exp(big) - exp(small)) given big >= small
    if small == -math.inf:
        return big
    d = small - big
    if d >= 0:
        return -math.inf
    return big + math.log1p(-math.exp(d))


def chi_log_mass(lo: float, hi: float, df: int) -> float:
    """``log P(lo <= chi_df <= hi)`` computed on whichever tail avoids cancellation."""
    lo = max(lo, 0.0)
    if hi <= lo:
        return -math.inf
    median = float(stats.chi.ppf(0.5, df))
    if lo >= median:
        return _log_diff(chi_logsf(lo, df), chi_logsf(hi, df))
    if hi <= median:
        return _log_diff(chi_logcdf(hi, df), chi_logcdf(lo, df))
    outside = math.exp(chi_logcdf(lo, df)) + math.exp(chi_logsf(hi, df))
    return math.log1p(-outside)


def truncated_chi_survival(T: float, df: int, truncation: IntervalUnion) -> float:
    """``P(chi_df >= T | chi_df in truncation)``.

    Masses are combined in log space, so the ratio stays accurate when the
    truncation set sits far in the tail.
    """
    if df < 1:
        raise ContractViolation("df must be a positive integer")
    if not T >= 0:
        raise ContractViolation(f"statistic must be non-negative, got {T}")
    if truncation.is_empty():
        raise ContractViolation("truncation set is empty")
    if truncation.intervals[0][0] < -1e-12:
        raise ContractViolation("truncation set must lie in [0, inf)")
    if not truncation.contains(T, tol=1e-8):
        raise ContractViolation(f"statistic {T} lies outside the truncation set {truncation}")
    den = [chi_log_mass(lo, hi, df) for lo, hi in truncation]
    num = [chi_log_mass(max(lo, T), hi, df) for lo, hi in truncation if hi > T]
    log_den = special.logsumexp(den)
    if not num:
        return 0.0
    log_num = special.logsumexp(num)
    if log_den == -math.inf:
        # every interval underflowed even in log space: nothing left to compare
        return 1.0 if T <= truncation.intervals[0][0] else 0.0
    return float(min(1.0, max(0.0, math.exp(log_num - log_den))))


def estimate_sigma(X, y, method: str = "full_model_residual") -> float:
    """Residual scale of the least-squares fit on every column of ``X``."""
    if method not in SIGMA_METHODS:
        raise ContractViolation(f"unknown sigma method {method!r}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    rank = int(np.linalg.matrix_rank(X)) if p else 0
    if n <= p or n <= rank:
        raise InsufficientDofError(
            f"cannot estimate sigma from the full-model residual with n={n}, p={p}; "
            "supply a known sigma instead"
        )
    resid = y - projector(X) @ y
    return float(np.sqrt(resid @ resid / (n - rank)))


def _test_direction(X, active, j):
    rest = [k for k in active if k != j]
    xj = X[:, j]
    r = xj - projector(X[:, rest]) @ xj if rest else xj.copy()
    norm = np.linalg.norm(r)
    if norm == 0:
        raise ContractViolation(f"variable {j} is collinear with the rest of the active set")
    return r / norm


def selective_test(X, y, sel: CvSelection, j: int, sigma="plugin") -> SelectiveTestResult:
    """Test ``beta_j = 0`` in the selected model, conditional on ``sel.event``.

    The statistic is ``|eta' y| / sigma`` where ``eta`` spans the part of
    ``x_j`` orthogonal to the other active variables. The event is sliced
    along ``sign(eta' y) * eta`` with everything orthogonal to it held
    fixed, which gives the truncation set for a one-degree-of-freedom chi.

    ``sigma`` is a positive float, or ``"plugin"`` to use
    :func:`estimate_sigma`.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if j not in sel.active_set:
        raise ContractViolation(f"variable {j} is not in the active set {sel.active_set}")
    if isinstance(sigma, str):
        if sigma != "plugin":
            raise ContractViolation(f"sigma must be a positive number or 'plugin', got {sigma!r}")
        sigma_val, source = estimate_sigma(X, y), "plugin"
    else:
        sigma_val, source = float(sigma), "known"
    if not sigma_val > 0 or not math.isfinite(sigma_val):
        raise ContractViolation(f"sigma must be positive and finite, got {sigma_val}")

    eta = _test_direction(X, sel.active_set, j)
    proj = float(eta @ y)
    T = abs(proj) / sigma_val
    u = eta if proj >= 0 else -eta

    # slicing from y keeps the base inside the event; shift to the statistic's scale
    offsets = sel.event.slice(y, sigma_val * u)
    trunc = offsets.shift(T).clip(0.0, math.inf).drop_narrow(NARROW_TOL, keep=T)
    if trunc.is_empty():
        raise InconsistentEventError(f"empty truncation set for variable {j}")
    p = truncated_chi_survival(T, 1, trunc)
    return SelectiveTestResult(
        variable=int(j),
        statistic=T,
        df=1,
        sigma=sigma_val,
        truncation=trunc,
        p_value=p,
        sigma_source=source,
        naive_p_value=float(stats.chi2.sf(T * T, 1)),
    )


def selective_tests(X, y, sel: CvSelection, sigma="plugin") -> list:
    """Run :func:`selective_test` for every active variable (sigma estimated once)."""
    if isinstance(sigma, str) and sigma == "plugin" and sel.active_set:
        est = estimate_sigma(X, y)
        results = [selective_test(X, y, sel, j, est) for j in sel.active_set]
        return [replace(r, sigma_source="plugin") for r in results]
    return [selective_test(X, y, sel, j, sigma) for j in sel.active_set]

