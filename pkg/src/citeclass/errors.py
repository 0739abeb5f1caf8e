"""Exception types shared across the toolkit."""

from __future__ import annotations


class CiteclassError(Exception):
    """Base class for all toolkit errors."""


class DataFormatError(CiteclassError):
    """Raised when an input file cannot be parsed into a corpus."""


class SchemeError(CiteclassError):
    """Label scheme violation: unknown label, scheme mismatch, bad index."""


class StratificationError(CiteclassError):
    """A class is too small for the requested stratified partitioning."""


class ConfigError(CiteclassError):
    """Invalid or unknown experiment configuration."""


class TrainingDivergedError(CiteclassError):
    """Training produced a non-finite loss."""


class BackendUnavailableError(CiteclassError):
    """A pretrained-encoder backend is not registered or not installed."""

    def __init__(self, backend: str, reason: str = ""):
        self.backend = backend
        msg = f"pretrained backend {backend!r} is not available"
        if reason:
            msg += f": {reason}"
        super().__init__(msg)


class CheckpointError(CiteclassError):
    """A pretrained checkpoint is missing or unreadable."""


class ModelIntegrityError(CiteclassError):
    """A saved model file failed its embedded checksum."""


class ChecksumMismatchError(CiteclassError):
    """A fetched or verified file does not match its expected digest."""


class ModelVersionError(CiteclassError):
    """A saved model file uses an unsupported schema version."""


class StageError(CiteclassError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")
