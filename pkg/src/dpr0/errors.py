"""Exception hierarchy shared by all modules."""


class DPR0Error(Exception):
    """Base class for library errors."""

    exit_code = 1


class ArgumentError(DPR0Error, ValueError):
    exit_code = 2


class ValidationError(ArgumentError):
    """Input data violates a model invariant."""


class ParseError(ValidationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleBudgetError(DPR0Error):
    exit_code = 3


class NumericDomainError(DPR0Error, ArithmeticError):
    exit_code = 4


class ConvergenceError(NumericDomainError):
    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class InstabilityError(NumericDomainError):
    pass


class PreconditionError(DPR0Error):
    exit_code = 2
