"""Exception hierarchy shared by all solvers."""


class EOTError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(EOTError, ValueError):
    pass


class NumericalFailure(EOTError, ArithmeticError):
    pass


class NumericalOverflow(NumericalFailure):
    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class SingularOperator(NumericalFailure):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class EmptySubspace(InvalidInput):
    pass


class InnerSolverFailure(NumericalFailure):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class PauliViolation(EOTError):
    """The one-body marginal fails the strict Pauli condition 0 < gamma < 1/N."""

    def __init__(self, status):
        super().__init__(
            f"marginal is {status.classification!r} for the Pauli condition "
            f"(max eigenvalue {status.max_eig:.6g})"
        )
        self.status = status


class OracleFailure(EOTError):
    pass
