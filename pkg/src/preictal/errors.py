"""Exception types raised across the toolkit."""


class PreictalError(Exception):
    """Base class for all toolkit errors."""


class ParseError(PreictalError):
    """Malformed file content. Carries the byte offset of the bad field."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class TruncationError(PreictalError):
    """File shorter than its header declares."""


class FormatError(PreictalError):
    """Wrong magic number / unsupported container."""


class ValidationError(PreictalError, ValueError):
    """Invalid argument or inconsistent domain object."""


class InsufficientSeizuresError(ValidationError):
    """Fewer lead seizures than the partitioning scheme requires."""


class EmptyDatasetError(ValidationError):
    """Segmentation produced no usable windows."""


class LeakageError(PreictalError):
    """Held-out data reached a training or CV code path."""


class MetricError(ValidationError):
    """Metric undefined for the given inputs (e.g. single-class labels)."""
