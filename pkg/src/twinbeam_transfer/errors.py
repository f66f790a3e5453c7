"""Exception hierarchy shared by all modules."""


class TwinBeamError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TwinBeamError, ValueError):
    """A parameter or configuration value is out of range or malformed."""


class ConfigurationError(ValidationError):
    """A configuration refers to something that does not exist (channel, key, file schema)."""


class ModelError(TwinBeamError):
    """A covariance or sampling request is internally inconsistent (e.g. not PSD)."""


class RecordLengthError(TwinBeamError):
    """A time record is too short for the requested processing."""


class EstimationError(TwinBeamError):
    """A statistical estimate cannot be formed from the given data."""


class EmptySelectionError(TwinBeamError):
    """Post-selection kept zero events; downstream statistics are undefined."""


class InsufficientStatisticsError(EstimationError):
    """Post-selection kept fewer events than the configured minimum.

    Carries the offending count so callers can report or relax it.
    """

    def __init__(self, kept_count: int, minimum: int):
        self.kept_count = int(kept_count)
        self.minimum = int(minimum)
        super().__init__(
            f"selection kept {kept_count} events, fewer than the required minimum {minimum}"
        )
