"""Exception types shared across the package."""


class WmlabError(Exception):
    """Base class for all package errors."""


class ShapeError(WmlabError):
    """Array dimensions incompatible with the operation."""


class ParameterError(WmlabError):
    """Parameter outside its valid domain."""


class FormatError(WmlabError):
    """Malformed file: bad magic, wrong version, truncated or corrupt payload."""


class EmbeddingError(WmlabError):
    """Watermark embedding did not reach full watermark accuracy.

    Carries the final watermark accuracy so callers can report it.
    """

    def __init__(self, message, watermark_accuracy):
        super().__init__(message)
        self.watermark_accuracy = watermark_accuracy


class InsufficientCandidatesError(WmlabError):
    """Not enough usable candidates in the pool (e.g. adversarial flips)."""


class TrainingDivergedError(WmlabError):
    """Loss became NaN/inf during training."""
