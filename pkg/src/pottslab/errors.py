"""Exception hierarchy.

Everything raised on purpose derives from :class:`PottsError`; the CLI maps
those to exit code 1.
"""


class PottsError(Exception):
    pass


class ContractViolation(PottsError, ValueError):
    """Bad input shape, dimension mismatch or violated precondition."""


class ParameterError(PottsError, ValueError):
    """Model parameters outside the range an operation supports."""


class CapacityError(PottsError):
    """An exhaustive computation would exceed its size guard."""


class SamplingFailure(PottsError):
    """Rejection sampling ran out of attempts."""


class NumericError(PottsError):
    """An iterative numeric routine did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class OptimizationFailure(PottsError):
    """No start point of a multistart ascent converged.

    ``best`` holds the best-effort result anyway.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
