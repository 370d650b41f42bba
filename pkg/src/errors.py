"""Exceptions raised by the ANWSER model."""

from typing import Any, Optional


class AnwserError(Exception):
    """Base class for every model error."""


class FeasibilityError(AnwserError):
    """A sampled system violates a balance-sheet prerequisite.

    Monte Carlo drivers discard the sample and draw again.
    """


class InfeasibleTheta(FeasibilityError):
    """External assets cannot cover the net interbank borrowings."""


class NegativeDeposits(FeasibilityError):
    """theta + gamma is too large for at least one bank."""


class InvalidDegree(AnwserError, ValueError):
    pass


class EmptyNetwork(AnwserError, ValueError):
    pass


class ZeroLoans(AnwserError, ValueError):
    pass


class Unreachable(AnwserError):
    """The requested top-5 share cannot be reached by any heterogeneity r."""


class TooFewAssets(AnwserError, ValueError):
    pass


class InfeasibleTargets(AnwserError, ValueError):
    """No two-group portfolio hits the requested (delta, epsilon)."""


class EmptyInput(AnwserError, ValueError):
    pass


class NonConvergence(AnwserError):
    def __init__(self, message: str, error_estimate: float):
        super().__init__(message)
        self.error_estimate = error_estimate


class NotEnoughEvents(AnwserError):
    """Too few samples with an initial bankruptcy for a reliable quantile.

    The partial cell statistics travel with the exception so callers can
    still report them.
    """

    def __init__(self, message: str, statistics: Optional[Any] = None):
        super().__init__(message)
        self.statistics = statistics


class ConfigError(AnwserError, ValueError):
    pass


class NetworkRejected(AnwserError):
    """Every network drawn for a cell violated a balance-sheet prerequisite."""

    def __init__(self, message: str, n_rejected: int):
        super().__init__(message)
        self.n_rejected = n_rejected
