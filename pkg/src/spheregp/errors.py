"""Exception hierarchy shared across the package."""


class SphereGPError(Exception):
    """Base class for all errors raised by this package."""


class InvalidPointError(SphereGPError):
    """A coordinate triple is not on the unit sphere within tolerance."""


class ParameterOverflowError(SphereGPError):
    """Model coefficients produced non-finite scaling values."""


class InvalidSmoothnessError(SphereGPError):
    """Matern smoothness must be strictly positive."""


class NumericalSingularityError(SphereGPError):
    """A linear solve or factorization failed.

    ``index`` identifies the offending observation when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DuplicateLocationError(SphereGPError):
    """Duplicate locations where distinct ones are required."""


class InvalidInputError(SphereGPError):
    """Malformed arguments to a scoring or utility function."""


class DataError(SphereGPError):
    """Base class for data ingestion and preprocessing failures."""


class ParseError(DataError):
    """CSV parsing failed; message names the offending line."""


class TransformError(DataError):
    """A preprocessing transform could not be applied."""


class DegenerateScaleError(TransformError):
    """Standardization impossible because the sample deviation is zero."""


class RegionPlacementError(DataError):
    """Could not place a non-overlapping test region."""


class SimulationInfeasibleError(SphereGPError):
    """Covariance factorization failed even after maximum jitter."""


class ConfigError(SphereGPError):
    """Experiment configuration is invalid."""
