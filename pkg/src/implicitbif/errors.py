"""Exception hierarchy shared by the solver modules."""


class ImplicitBifError(Exception):
    """Base class for all package errors."""


class ExpressionSyntaxError(ImplicitBifError):
    """Malformed expression text.

    Attributes:
        offset: byte offset into the source text where parsing failed.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExpressionSyntaxError):
    pass


class EvaluationDomainError(ImplicitBifError, ArithmeticError):
    """Evaluation left the real domain (ln of non-positive, division by zero, ...)."""


class ConvergenceError(ImplicitBifError):
    """Newton iteration did not reach the residual tolerance."""


class SingularError(ImplicitBifError):
    """A derivative or Jacobian the solver must invert is (numerically) zero."""


class MinimalityError(ImplicitBifError):
    """The computed orbit has a smaller true period than requested."""


class PreconditionError(ImplicitBifError):
    pass


class InconsistentSystemError(ImplicitBifError):
    """Over-determined system whose least-squares residual stalls above tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class BranchEscapeError(ImplicitBifError):
    """A perturbed trajectory left the solution branch of the unperturbed orbit."""

    def __init__(self, message, offset):
        super().__init__(message)
        self.offset = offset
