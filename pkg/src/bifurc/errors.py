"""Exception types shared across the package."""


class BifurcError(Exception):
    """Base class for library-specific errors."""


class DomainError(BifurcError, ValueError):
    """Raised for non-finite or otherwise invalid numeric inputs."""


class UnsupportedFamilyError(BifurcError, TypeError):
    """Raised when an operation requires a bounded-factor family but got
    a general 1-D map (or vice versa)."""


class EscapeError(BifurcError, RuntimeError):
    """Raised when an orbit leaves the admissible domain of a general
    1-D map and the caller required a complete orbit."""


class FormatError(BifurcError, ValueError):
    """Raised when a data file does not match its declared format."""
