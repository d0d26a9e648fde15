class So2DegError(Exception):
    """Base class for library errors."""


class NotSymmetricError(So2DegError, ValueError):
    pass


class ConvergenceError(So2DegError, RuntimeError):
    pass


class ResonanceError(So2DegError):
    """An eigenvalue sits on a mode threshold 4 k^2 pi^2 / T^2."""

    def __init__(self, message: str, k: int | None = None):
        super().__init__(message)
        self.k = k


class SingularHessianError(So2DegError):
    """Nondegenerate index formula used on a singular Hessian."""


class BrouwerIndexError(So2DegError):
    """Local Brouwer index could not be obtained."""


class ModelHypothesisError(So2DegError, ValueError):
    """Model potential violates the simplicity hypothesis on its spectrum."""


class SpecError(So2DegError, ValueError):
    """Malformed or inconsistent system specification."""


class CriterionSilentError(So2DegError):
    """Every compared coordinate lies in the exclusion set."""


class NotProvenError(So2DegError):
    """Continuation requested for a base system without an existence proof."""


class VerificationUnavailable(So2DegError):
    """Orbit search needs potential callbacks that the spec does not carry."""


class OrbitNotFound(So2DegError):
    pass
