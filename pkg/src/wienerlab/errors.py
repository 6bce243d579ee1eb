"""Exception types.

Validation problems derive from :class:`ValidationError` and numerical
warnings that still produce a result derive from :class:`NumericalFlag`; the
CLI maps them to exit codes 1 and 2.
"""


class WienerlabError(Exception):
    """Base class for all package errors."""


class ValidationError(WienerlabError, ValueError):
    """Bad parameters or inputs, raised before any computation."""


class InvalidParameter(ValidationError):
    pass


class UnsupportedKind(ValidationError):
    pass


class InsufficientPaths(ValidationError):
    pass


class DegenerateInterval(ValidationError):
    pass


class ConditionAViolation(ValidationError):
    pass


class MissingArtifact(ValidationError):
    pass


class NumericalFlag(WienerlabError, ArithmeticError):
    """A computation finished but its output should not be trusted."""


class FactorizationFailure(NumericalFlag):
    pass


class NormDivergence(NumericalFlag):
    pass


class NonIntegrableTheta(NumericalFlag):
    pass


class EntropyDivergence(NumericalFlag):
    pass


class QuadratureOverflow(NumericalFlag):
    pass


class NoBracket(NumericalFlag):
    pass
