"""Exception hierarchy.

Each error carries the process exit code the command line uses for it.
"""


class IdentificationError(Exception):
    exit_code = 1


class ConfigError(IdentificationError, ValueError):
    """Invalid configuration, unknown model or test kind."""

    exit_code = 1


class DimensionError(IdentificationError, ValueError):
    exit_code = 1


class DataError(IdentificationError, ValueError):
    """Malformed, missing or inconsistent experimental data."""

    exit_code = 2


class DegenerateWeightError(DataError):
    """A measurement series is identically zero, so its weight is undefined."""


class ModelDomainError(IdentificationError, ValueError):
    """Parameters outside the domain where a forward model is defined."""

    exit_code = 3


class EvaluationError(IdentificationError, RuntimeError):
    exit_code = 3


class SolverError(IdentificationError, RuntimeError):
    """Raised by the local solver; ``trace`` holds the iterations done so far."""

    exit_code = 3

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InsufficientDataError(IdentificationError, ValueError):
    exit_code = 3


class UnknownSensorError(DataError, LookupError):
    pass


class PreconditionError(IdentificationError, ValueError):
    exit_code = 3
