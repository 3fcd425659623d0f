"""Selective inference for forward stepwise models whose size is chosen by K-fold CV."""

from .constraints import QuadraticConstraint, SelectionEvent, contains, embed, slice_event
from .cvquad import (
    CvQuadratic,
    CvSelection,
    FoldAssignment,
    assemble_cv,
    select_sparsity,
    split_event,
)
from .exceptions import (
    ContractViolation,
    CSVParseError,
    CvSelInfError,
    InconsistentEventError,
    InsufficientDofError,
    NumericalFailure,
)
from .intervals import IntervalUnion
from .numkernel import pseudoinverse, quad_eval, solve_quadratic_ineq
from .seltest import (
    SelectiveTestResult,
    estimate_sigma,
    selective_test,
    selective_tests,
    truncated_chi_survival,
)
from .stepwise import StepwisePath, fit_stepwise, hat_matrix

__version__ = "0.1.0"
