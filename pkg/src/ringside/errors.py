"""Exception types shared across the pipeline."""


class RingsideError(Exception):
    """Base class for all domain errors raised by this package."""


class GeometryError(RingsideError):
    """Degenerate or invalid geometric input (zero-area bbox, bad ring, ...)."""


class ParseError(RingsideError):
    """A stream line could not be decoded."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class OrderingError(RingsideError):
    """Frame indices were not strictly increasing."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class SchemaError(RingsideError):
    """Structurally valid input that violates a declared invariant."""


class EmptyStreamError(RingsideError):
    """An operation that needs at least one frame received none."""


class DegeneratePoseError(RingsideError):
    """Pose landmarks too broken to compute the requested quantity."""


class IncomparablePoseError(RingsideError):
    """Two poses share no mutually valid landmark."""


class MetricError(RingsideError):
    """A metric is undefined for the given input (e.g. empty ground truth)."""
