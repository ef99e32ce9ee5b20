"""Exception taxonomy shared by all modules."""


class PersuadeError(Exception):
    """Base class for package errors."""


class ConfigurationError(PersuadeError):
    """Invalid problem definition or run configuration (CLI exit code 2)."""


class NumericDomainError(PersuadeError):
    """An evaluator produced a non-finite or out-of-domain value."""


class SolverError(PersuadeError):
    """An iterative solver failed to converge (CLI exit code 3).

    Carries whatever partial result was available at failure time in
    ``payload`` and the final residual in ``residual``.
    """

    def __init__(self, message, residual=None, payload=None):
        super().__init__(message)
        self.residual = residual
        self.payload = payload


class DegenerateCellError(PersuadeError):
    """A cell-averaged Jacobian is numerically singular."""


class PreconditionError(PersuadeError):
    """Input violates a documented precondition of an operation."""
