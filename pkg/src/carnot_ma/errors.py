"""Exception types shared across the package."""


class CarnotMAError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(CarnotMAError, ValueError):
    """Inputs have inconsistent shapes (point vs. family dimension, etc.)."""


class DomainError(CarnotMAError, ValueError):
    """A mathematical-domain violation: non-PSD matrix where positivity is
    required, log of a nonpositive quantity, or evaluation of a function
    outside the region where it is defined."""


class UnsupportedFamilyError(CarnotMAError):
    """The vector-field family satisfies neither structural hypothesis
    required by a construction."""


class ConstructionError(CarnotMAError):
    """A certified construction (perturbation, barrier) failed its sampled
    checks or was rejected by a precondition."""

    def __init__(self, message, worst_point=None, diagnostics=None):
        super().__init__(message)
        self.worst_point = worst_point
        self.diagnostics = diagnostics or {}


class PerronEmptyError(CarnotMAError):
    """No valid starting subsolution could be obtained for the Dirichlet
    problem (the set of admissible subsolutions appears to be empty)."""


class ConfigError(CarnotMAError, ValueError):
    """Problem configuration failed validation."""


class ExpressionError(ConfigError):
    """An arithmetic expression failed to parse or evaluate."""

    def __init__(self, message, source=None, position=None):
        if source is not None and position is not None:
            message = f"{message} (at column {position + 1} of {source!r})"
        super().__init__(message)
        self.source = source
        self.position = position
