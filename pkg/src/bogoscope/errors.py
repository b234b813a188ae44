"""Exception hierarchy shared by all modules.

Every error raised on bad input or failed numerics derives from
``DomainError`` so the command line front end can map it to exit status 1.
"""


class DomainError(Exception):
    """Input outside the domain of an operation, or a failed computation."""


class ExtrapolationError(DomainError):
    """A tabulated quantity was queried outside its sample range."""


class ConvergenceError(DomainError):
    """An iterative solver stopped without meeting its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConsistencyError(DomainError):
    """Two independent evaluations of the same quantity disagree."""


class InstabilityError(DomainError):
    """A fixed-point map left its admissible branch."""
