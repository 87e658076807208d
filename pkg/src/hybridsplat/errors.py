"""Exception hierarchy shared across the package."""


class SplatError(Exception):
    """Base class for all package errors."""


class ConfigError(SplatError):
    """Invalid configuration, flag value, or malformed input description."""


class InvalidParameterError(SplatError):
    """Non-finite or otherwise unusable primitive parameters."""


class DegenerateScaleError(InvalidParameterError):
    """All scale components vanish; effective rank is undefined."""


class IntegrityError(SplatError):
    """Mismatched data that should have come from the same pipeline run."""


class ManifestError(ConfigError):
    """Scene manifest failed to parse or references missing data."""


class CheckpointError(SplatError):
    """Checkpoint file is truncated, has a bad magic, or a wrong version."""


class NumericError(SplatError):
    """A loss or gradient became non-finite during optimization."""
