"""Exception types raised across the toolkit."""


class ToolkitError(Exception):
    """Base class for all toolkit-specific errors."""


class FormatError(ToolkitError):
    """A file does not conform to its expected format.

    Carries the offending line number (1-based) when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingIdError(ToolkitError):
    """Track IDs were requested but the source carries none."""


class InvariantError(ToolkitError):
    """A domain invariant was violated (bad geometry, duplicate rows, ...)."""


class OutOfOrderFrameError(InvariantError):
    """A tracker was stepped with a non-increasing frame index."""


class NumericError(ToolkitError):
    """A numerical routine failed (singular solve, non-PD covariance, ...)."""


class EmptyGroundTruthError(ToolkitError):
    """Evaluation was requested against ground truth with zero boxes."""


class SampleTooLargeError(ToolkitError):
    """A sample larger than the population was requested."""


class DegenerateDataError(ToolkitError):
    """Training data cannot be split/used as configured."""


class DimensionMismatchError(ToolkitError):
    """A feature vector does not match the model dimension."""
