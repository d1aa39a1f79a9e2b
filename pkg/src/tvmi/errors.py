"""Exception hierarchy.

Every error raised deliberately by the package derives from :class:`TvmiError`.
Most also derive from :class:`ValueError` so generic callers can catch them.
"""


class TvmiError(Exception):
    """Base class for package errors."""


class ParseError(TvmiError, ValueError):
    """Malformed input file content."""


class DomainError(TvmiError, ValueError):
    """A value lies outside its admissible domain (e.g. non-positive price)."""


class OrderingError(TvmiError, ValueError):
    """Dates are not strictly increasing."""


class InsufficientDataError(TvmiError, ValueError):
    """Too few observations for the requested computation."""


class IncompleteDataError(TvmiError, ValueError):
    """Missing entries where a fully observed panel is required."""


class DegenerateError(TvmiError, ValueError):
    """Constant series or zero-variance regressor."""


class CollinearityError(TvmiError, ArithmeticError):
    """Rank-deficient design or singular moment matrix."""


class ConditioningError(TvmiError, ArithmeticError):
    """Numerically near-singular matrix."""


class ShapeError(TvmiError, ValueError):
    """Non-conforming array dimensions."""


class ParameterError(TvmiError, ValueError):
    """Invalid tuning parameter."""


class InstabilityError(TvmiError, ArithmeticError):
    """A simulated path exploded or a scenario is dynamically unstable."""


class AlignmentError(TvmiError, ValueError):
    """Series spans do not match."""


class ConfigError(TvmiError, ValueError):
    """Invalid pipeline configuration."""
