"""Exception types raised across the package."""


class AAError(Exception):
    """Base class for all errors raised by :mod:`aapp`."""


class DimensionError(AAError, ValueError):
    """Array shapes or vector lengths do not agree."""


class InputError(AAError, ValueError):
    """Input contains non-finite values or is otherwise malformed."""


class CardinalityError(AAError, ValueError):
    """Requested number of archetypes is outside ``[1, n]``."""


class DegenerateError(AAError, ValueError):
    """A distribution or scale factor is undefined (e.g. all weights zero)."""


class ConvergenceError(AAError, RuntimeError):
    """An iterative solver hit its iteration cap.

    The best iterate reached so far is available as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SolverError(AAError, RuntimeError):
    """A sub-solve failed for a specific row of a batch.

    ``index`` is the offending row (or archetype) and ``cause`` the original
    exception.
    """

    def __init__(self, message, index=None, cause=None):
        super().__init__(message)
        self.index = index
        self.cause = cause


class ParseError(AAError, ValueError):
    """A data file could not be parsed. ``line`` and ``column`` are 1-based."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ConfigError(AAError, ValueError):
    """Invalid experiment or generator configuration."""
