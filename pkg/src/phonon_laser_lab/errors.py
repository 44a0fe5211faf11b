"""Exception hierarchy for the simulation engine."""


class PhononLabError(Exception):
    """Base class for all engine errors."""


class IntegrationError(PhononLabError):
    """The adaptive stepper could not continue."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class StepSizeUnderflow(IntegrationError):
    pass


class Unbounded(IntegrationError):
    pass


class LinearizationBreakdown(IntegrationError):
    """Covariance norm diverged; the linearized fluctuation picture is invalid."""


class AmbiguousAttractor(PhononLabError):
    """Post-transient variation sits inside the classification hysteresis band."""

    def __init__(self, message, variation=None):
        super().__init__(message)
        self.variation = variation


class NotConverged(PhononLabError):
    pass


class SingularOpticalSystem(PhononLabError):
    pass


class NoRoot(PhononLabError):
    pass


class NoBracket(PhononLabError):
    pass


class NotHurwitz(PhononLabError):
    pass


class NonPhysical(PhononLabError):
    pass
