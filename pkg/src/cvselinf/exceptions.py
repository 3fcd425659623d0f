"""Exception hierarchy shared across the package."""


class CvSelInfError(Exception):
    """Base class for all errors raised by cvselinf."""


class ContractViolation(CvSelInfError, ValueError):
    """An argument breaks a documented precondition (shape, range, membership)."""


class NumericalFailure(CvSelInfError, ArithmeticError):
    """A numerical routine failed to converge."""

    def __init__(self, message, shape=None):
        if shape is not None:
            message = f"{message} (matrix shape {tuple(shape)})"
        super().__init__(message)
        self.shape = shape


class InconsistentEventError(CvSelInfError, RuntimeError):
    """The observed response is not inside its own selection event.

    This always points to an assembly bug upstream, never to bad user data.
    """


class InsufficientDofError(CvSelInfError, ValueError):
    """Too few residual degrees of freedom to estimate the noise scale."""


class CSVParseError(CvSelInfError, ValueError):
    """Malformed input table. ``row`` and ``column`` locate the problem when known."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column
