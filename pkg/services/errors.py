class FocalFramesError(Exception):
    """Base class for every error raised by the focalframes services."""


class InvalidRanges(FocalFramesError):
    pass


class ShapeMismatch(FocalFramesError):
    pass


class AxisMismatch(FocalFramesError):
    pass


class SingularMetric(FocalFramesError):
    pass


class NotValidated(FocalFramesError):
    """Raised when an operation receives data that fails validation."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__(f"data failed validation: {', '.join(violations)}")


class WrongAmbient(FocalFramesError):
    pass


class ZeroPoint(FocalFramesError):
    pass


class NotFactorable(FocalFramesError):
    pass


class EigenFailure(FocalFramesError):
    pass


class InconsistentResult(FocalFramesError):
    """Two computations that must agree did not."""


class PositionedError(FocalFramesError):
    """An error tied to a location in some source text."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None and column is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ExpressionSyntaxError(PositionedError):
    pass


class UnknownIdentifier(PositionedError):
    pass


class ArityError(PositionedError):
    pass


class InputError(PositionedError):
    pass


class UsageError(FocalFramesError):
    pass


class DomainError(FocalFramesError):
    pass


class RankDeficient(FocalFramesError):
    pass


class StepTooCoarse(FocalFramesError):
    pass


class NotClosed(FocalFramesError):
    pass


class NotFlat(FocalFramesError):
    pass


class PathDependence(FocalFramesError):
    pass


class RankDeficientField(FocalFramesError):
    pass


class PreconditionFailed(FocalFramesError):
    pass
