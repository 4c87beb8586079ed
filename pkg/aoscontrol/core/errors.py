"""Exception types raised by AoSControl."""


class AosControlError(Exception):
    """Base class for every error the CLI reports as a typed failure."""


class ConfigError(AosControlError):
    """Invalid configuration file, key or value."""


class InvalidActionError(AosControlError, ValueError):
    """Action outside the action space of the configured system."""


class NonFiniteError(AosControlError, ArithmeticError):
    """A loss or gradient became NaN or infinite."""


class CalibrationError(AosControlError):
    """Link calibration fell outside the accepted delivery band."""


class MissingArtifactError(AosControlError):
    """A dataset or checkpoint required by a command does not exist."""


class CheckpointError(AosControlError):
    """Malformed or incompatible parameter checkpoint."""


class DatasetError(AosControlError):
    """Base class for experience store failures."""


class StoreVersionError(DatasetError):
    """Store written by an unsupported format version."""


class TruncatedStoreError(DatasetError):
    """Store file ends before the declared record count."""


class FingerprintMismatchError(DatasetError):
    """Store was collected under a different physical configuration."""


class InsufficientRecordsError(DatasetError):
    """Source store cannot supply the requested number of records."""
