"""Exception hierarchy shared by all modules."""


class ImpulsiveNetError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ImpulsiveNetError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class ValidationError(ImpulsiveNetError, ValueError):
    """Inputs are structurally inconsistent (wrong shapes, bad kinds)."""


class ConfigurationError(ImpulsiveNetError, ValueError):
    """A required piece of configuration is missing, e.g. the period."""


class LambdaUndefinedError(ImpulsiveNetError):
    """The H4 quantity is >= 1, so the comparison constant does not exist."""

    code = "lambda-undefined"


class NonConvergenceError(ImpulsiveNetError):
    """An iterative solver hit its iteration cap.

    ``last`` holds the final iterate and ``delta`` the size of the last step.
    """

    def __init__(self, message, last=None, delta=None, ratio=None):
        super().__init__(message)
        self.last = last
        self.delta = delta
        self.ratio = ratio


class DivergenceError(ImpulsiveNetError):
    """The integrated state became non-finite.

    ``trajectory`` is the partial trajectory up to the last finite sample.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
