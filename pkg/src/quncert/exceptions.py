"""Exception hierarchy shared across the library.

Every failure mode raised by library code derives from :class:`QuncertError`,
so callers (and the CLI) can map error classes to diagnostics uniformly.
"""


class QuncertError(Exception):
    """Base class for all library errors."""


class DomainError(QuncertError, ValueError):
    """An argument lies outside an operation's stated domain."""


class ResourceError(QuncertError):
    """A computation would exceed a configured size cap."""


class InternalError(QuncertError):
    """An internal consistency check failed; indicates a bug, not bad input."""


class ConvergenceError(QuncertError):
    """An iterative solver failed to reach its tolerance."""


class GridTooSmallError(QuncertError):
    """A computed state does not decay below tolerance at the grid boundary."""


class AccuracyError(QuncertError):
    """A discretized result failed its accuracy self-check."""
