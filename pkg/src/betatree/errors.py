"""Exception classes raised by the betatree package."""


class BetaTreeError(Exception):
    """Base class for all package errors."""


class TiesDetected(BetaTreeError):
    """A coordinate contains duplicate values and jitter was not requested."""


class NonFiniteValue(BetaTreeError):
    """The data contain NaN or infinite entries."""


class TooFewPoints(BetaTreeError):
    """Bounding-box trimming left no observations."""


class InvalidShape(BetaTreeError, ValueError):
    """Beta shape parameters must be strictly positive."""


class NoConvergence(BetaTreeError, ArithmeticError):
    """An iterative numeric kernel exhausted its iteration budget."""


class UnboundedRect(BetaTreeError):
    """A volume-based quantity was requested for an unbounded rectangle."""


class EmptyResult(BetaTreeError):
    """No bounded rectangle passed the goodness-of-fit test."""


class Disconnected(BetaTreeError):
    """Two bins are not connected in the adjacency graph."""


class NotPositiveDefinite(BetaTreeError, ValueError):
    """A covariance matrix has no Cholesky factor."""


class ParseError(BetaTreeError, ValueError):
    """A CSV cell could not be parsed as a finite number."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptySelection(BetaTreeError, ValueError):
    """Column selection produced an empty matrix."""


class InvalidAxis(BetaTreeError, ValueError):
    """A slice axis is out of range for the document dimension."""
