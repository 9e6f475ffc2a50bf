"""Exception types shared across the package."""


class NCResidueError(Exception):
    """Base class for all package errors."""


class DomainError(NCResidueError, ValueError):
    """An operation was called outside its supported domain."""


class ConvergenceError(NCResidueError, ArithmeticError):
    """A limit, extrapolation or quadrature did not converge."""


class HomogeneityEvaluationError(NCResidueError):
    """A term failed to evaluate at a sampled point."""


class SupportOverflowError(NCResidueError, ValueError):
    """A result would extend past the grid or region it lives on."""


class MissingTermError(NCResidueError, LookupError):
    """An operator model lacks the term a residue formula needs."""


class SpecError(NCResidueError, ValueError):
    """A spec file could not be parsed; carries line/field context."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
