"""Exception types shared across the package."""


class GttaError(Exception):
    """Base class for all library errors."""


class FormatError(GttaError):
    """Malformed, truncated, or otherwise unreadable on-disk artifact."""


class DataError(GttaError):
    """Input data violates a documented precondition."""


class ParamError(GttaError):
    """Invalid parameter value."""


class ShapeError(GttaError):
    """Array dimensions do not match the operation's contract."""


class IoError(GttaError):
    """Filesystem read or write failure."""


class DegenerateWeightError(GttaError):
    """All loss weights are zero, so the normalized loss is undefined."""


class TrainingDivergedError(GttaError):
    """Loss became non-finite during training."""

    def __init__(self, step: int, message: str | None = None):
        super().__init__(message or f"training diverged at step {step}")
        self.step = step


class UnsupportedTaskError(GttaError):
    """The operation is not defined for this task kind."""


class PredictorError(GttaError):
    """An external predictor process failed or returned malformed output."""
