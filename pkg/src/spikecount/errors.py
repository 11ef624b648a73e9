"""Exception types shared across the package."""


class SpikeCountError(Exception):
    """Base class for all library errors."""


class DimensionError(SpikeCountError):
    """Array shapes do not conform for the requested operation."""


class DomainError(SpikeCountError):
    """A value or index lies outside its valid domain."""


class ParseError(SpikeCountError):
    """A data file could not be parsed (message carries the line number)."""


class SchemaError(SpikeCountError):
    """Input data does not match the declared column roles."""


class FormatError(SpikeCountError):
    """A binary container has the wrong magic bytes or version."""


class CorruptionError(SpikeCountError):
    """A binary container is truncated or fails its checksum."""


class ConfigError(SpikeCountError):
    """A run config contains an unknown key or an unparseable value."""


class ValidationError(SpikeCountError):
    """A cross-field invariant of a config or model is violated."""


class ConsistencyError(SpikeCountError):
    """A forward trace does not belong to the given parameters."""


class TrainingDiverged(SpikeCountError):
    """Loss became non-finite during training."""
