"""Exception tree for ptbloch.

Numerical failures derive from NumericalError so the CLI can map them to one exit code; configuration
and input problems are also ValueErrors so ordinary callers can catch them the usual way.
"""


class PTBlochError(Exception):
    pass


class ConfigError(PTBlochError, ValueError):
    """Raised for an invalid experiment configuration. `key` is the dotted path of the offending entry."""

    def __init__(self, message, key=None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)


class InvalidPotential(PTBlochError, ValueError):
    pass


class NumericalError(PTBlochError):
    pass


class StepFailure(NumericalError):
    """The adaptive integrator could not meet its tolerance within the step budget."""

    def __init__(self, message, energy=None, steps=None):
        self.energy = energy
        self.steps = steps
        super().__init__(message)


class NoConvergence(NumericalError):
    """Newton-type iteration did not converge. `last` is the final iterate."""

    def __init__(self, message, seed=None, last=None, iterations=None):
        self.seed = seed
        self.last = last
        self.iterations = iterations
        super().__init__(message)


class OutOfWindow(NoConvergence):
    pass


class StallError(NumericalError):
    def __init__(self, message, last_point=None):
        self.last_point = last_point
        super().__init__(message)


class LocusStartError(NumericalError, ValueError):
    pass


class QRNoConvergence(NumericalError):
    pass


class DegenerateVector(NumericalError):
    pass


class DegenerateDivisor(NumericalError, ValueError):
    pass


class InsufficientSamples(NumericalError, ValueError):
    pass


class DegenerateFit(NumericalError):
    """Samples lie on a segment. `endpoints` are its ends in the complex plane, ordered along the segment."""

    def __init__(self, message, endpoints=None, center=None, pca_ratio=None):
        self.endpoints = endpoints
        self.center = center
        self.pca_ratio = pca_ratio
        super().__init__(message)


class ContinuationBreak(NumericalError):
    def __init__(self, message, last_good_x=None, trajectory=None):
        self.last_good_x = last_good_x
        self.trajectory = trajectory
        super().__init__(message)


class DivisorCollision(NumericalError):
    def __init__(self, message, x=None, indices=None):
        self.x = x
        self.indices = indices
        super().__init__(message)
