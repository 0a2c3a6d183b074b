"""Exception types shared across the package."""


class BoolutionError(Exception):
    """Base class for all package errors."""


class CapabilityError(BoolutionError):
    """Requested computation exceeds what an exact backend supports."""


class DegenerateCoordinateError(BoolutionError, ValueError):
    """A coordinate with sigma_i = 0 was used where sigma_i > 0 is required."""


class ExtinctionError(BoolutionError):
    """Lethal selection removed every individual (mean fitness is zero)."""


class PreconditionError(BoolutionError, ValueError):
    """An operation was called outside its parameter regime."""


class ConfigError(BoolutionError, ValueError):
    """Invalid experiment or function definition file."""
