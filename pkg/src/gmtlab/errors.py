"""Shared exception and warning types.

Contract violations (bad arguments, dimension mismatches, singular matrices)
raise `ContractError` subclasses; refusals of numerically unsafe requests
(resolution guards, LP size caps) raise `GuardError` subclasses so callers can
distinguish "you asked for something wrong" from "this instance is too coarse
or too large to answer honestly".
"""


class GmtLabError(Exception):
    """Base class for all errors raised by gmtlab."""


class ContractError(GmtLabError, ValueError):
    """An argument violates a documented precondition."""


class DimensionMismatchError(ContractError):
    """Operands live in different ambient dimensions."""


class SingularMatrixError(ContractError):
    """A matrix that must be invertible has |det| below the configured floor."""


class GuardError(GmtLabError, RuntimeError):
    """A numerical guard refused the request rather than report garbage."""


class ResolutionGuardError(GuardError):
    """Requested scale is too close to the sample spacing."""


class LpSizeError(GuardError):
    """Lipschitz LP instance exceeds the supported site count."""


class DiniDivergenceWarning(UserWarning):
    """The small-scale Dini integrand has not decayed at the lower cutoff."""
