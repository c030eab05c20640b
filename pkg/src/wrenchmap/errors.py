"""Exception types shared across the package."""


class WrenchmapError(Exception):
    """Base class for package-specific errors."""


class DegenerateWrench(WrenchmapError):
    """Force magnitude too small to define a line of action."""


class NoLineGridIntersection(WrenchmapError):
    """An action line does not pass through the grid domain."""


class CovarianceNotSPD(WrenchmapError):
    """A proposal covariance could not be repaired to positive definite."""


class SingularNormalMatrix(WrenchmapError):
    """The least-squares normal matrix is singular."""


class NoIntersection(WrenchmapError):
    """An action line does not intersect the tool surface."""


class OutOfDomain(WrenchmapError):
    """Surface evaluated outside the tool x-interval."""


class NoOverlap(WrenchmapError):
    """Grid has no columns overlapping the tool domain."""


class LengthMismatch(WrenchmapError):
    """Paired series have different lengths."""


class EmptyInput(WrenchmapError):
    """Aggregation requested over zero trials."""


class ConfigError(WrenchmapError):
    """Invalid or inconsistent run configuration."""


class DataError(WrenchmapError):
    """Malformed measurement or estimate data."""
