"""Exception hierarchy shared across the package.

Exit-code mapping for the CLI lives in :mod:`rmperm.cli`; library code raises
these types and never calls ``sys.exit`` itself.
"""


class RmpermError(Exception):
    """Base class for all rmperm-specific errors."""


class DimensionError(RmpermError, ValueError):
    """Matrix or design dimensions are invalid or incompatible."""


class ContrastError(RmpermError, ValueError):
    """A hypothesis matrix violates the contrast conditions (row sums, rank)."""


class DesignError(RmpermError, ValueError):
    """Factor level counts or layout are unsuitable for the requested effect."""


class NotPositiveSemidefiniteError(RmpermError, ValueError):
    """A matrix required to be PSD has an eigenvalue below tolerance."""


class InsufficientDataError(RmpermError, ValueError):
    """A group has too few subjects for the requested estimator."""


class DegenerateCovarianceError(RmpermError, ArithmeticError):
    """The studentizing matrix is numerically zero; the statistic is undefined."""


class SchemaError(RmpermError, ValueError):
    """Input data file violates the documented CSV schema."""


class ConfigError(RmpermError, ValueError):
    """A scenario configuration is malformed or inconsistent."""
