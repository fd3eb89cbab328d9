"""Exception hierarchy shared by all modules."""


class NonScatError(Exception):
    """Base class for every error raised by the package."""


class BranchCutHit(NonScatError, ValueError):
    """A field was evaluated on (or within 1e-12 of) one of its branch-cut rays."""


class WavenumberMismatch(NonScatError, ValueError):
    pass


class BesselZeroNotFound(NonScatError, RuntimeError):
    pass


class SeedNotOnCurve(NonScatError, ValueError):
    pass


class StallAtCriticalPoint(NonScatError, RuntimeError):
    """Tracing hit a point where the gradient vanishes.

    The location is attached so callers can switch branches.
    """

    def __init__(self, message, location=None, curve=None):
        super().__init__(message)
        self.location = location
        self.curve = curve


class CornerLawViolation(NonScatError, AssertionError):
    pass


class NotClosed(NonScatError, ValueError):
    pass


class SelfIntersecting(NonScatError, ValueError):
    pass


class StartIsStationary(NonScatError, ValueError):
    pass


class DegenerateCurve(NonScatError, ValueError):
    pass


class DomainNotClosed(NonScatError, ValueError):
    pass


class BcNotSatisfiedOnAxis(NonScatError, ValueError):
    pass


class InversionFailure(NonScatError, RuntimeError):
    pass


class ConditionSetViolated(NonScatError, ValueError):
    pass


class CannotSatisfyJacobianBound(NonScatError, RuntimeError):
    pass


class SolverDiverged(NonScatError, RuntimeError):
    pass


class WavelengthUnderResolved(NonScatError, ValueError):
    pass


class SourceInsideNeighborhood(NonScatError, ValueError):
    pass


class ConfigInvalid(NonScatError, ValueError):
    pass
