"""Exception types shared across the package."""


class RotantError(Exception):
    """Base class for all package errors."""


class InvalidAngleError(RotantError, ValueError):
    """Non-finite or out-of-range angle."""


class InvalidDirectionError(RotantError, ValueError):
    """Zero or non-unit direction vector."""


class DegenerateGeometryError(RotantError, ValueError):
    """Coincident points where a distance must be positive."""


class ConfigurationError(RotantError, ValueError):
    """Inconsistent sizes or options."""


class InfeasibleError(RotantError):
    """No point satisfies the constraints."""


class InvalidParameterError(RotantError, ValueError):
    """Parameter outside its admissible range."""


class NumericError(RotantError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class IllConditionedError(RotantError, ArithmeticError):
    """A least-squares system is rank deficient."""


class SubspaceRankError(RotantError, ValueError):
    """Not enough snapshots or antennas for the requested subspace split."""


class PilotOrthogonalityError(RotantError, ValueError):
    """Pilot length too short for the number of users."""


class InvalidSparsityError(RotantError, ValueError):
    """Requested sparsity exceeds the number of measurements."""


class UndefinedNMSEError(RotantError, ArithmeticError):
    """True channel is zero so the normalized error is undefined."""


class ValidationError(ConfigurationError):
    """A parsed configuration breaks a field rule; the message names the fields."""
