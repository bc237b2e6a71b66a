"""Exception types shared across the package."""


class StarNLSError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(StarNLSError, ValueError):
    """A constructor or operation precondition was violated."""


class ExistenceBoundError(InvalidParameterError):
    """Requested standing wave lies at or below its existence threshold in omega."""


class ZeroAlphaError(InvalidParameterError):
    """Operation requires a nonzero vertex strength; use the Kirchhoff builders instead."""


class ParityMismatchError(InvalidParameterError):
    """Edge-count parity does not match the requested Kirchhoff family."""


class DegenerateConfigurationError(InvalidParameterError):
    """Bump/tail configuration with 2j = N has no finite offset."""


class NonpositiveQuadraticFormError(StarNLSError, ValueError):
    """Quadratic part of the action is not positive; Nehari projection undefined."""


class BoundaryProximityError(InvalidParameterError):
    """A localized profile sits too close to the vertex or the truncated boundary."""


class ConvergenceError(StarNLSError, RuntimeError):
    """Iteration budget exhausted before reaching the requested tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NoSignChangeError(StarNLSError, ValueError):
    """Sign-change search requested in a regime where the quantity does not change sign."""


class BlowUpError(StarNLSError, RuntimeError):
    """Field amplitude exceeded the blow-up threshold during evolution."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time
