"""Exception hierarchy.

``ValidationError`` subclasses describe bad input (files, configs, arguments);
the CLI maps them to exit code 1. Everything else derived from
``SeatrackError`` is a runtime failure (exit code 2).
"""

from __future__ import annotations


class SeatrackError(Exception):
    pass


class ValidationError(SeatrackError):
    pass


# geometry
class SingularTransform(SeatrackError):
    pass


# cmc
class InsufficientCorrespondences(SeatrackError):
    pass


class DegenerateConfiguration(SeatrackError):
    pass


class NoConsensus(SeatrackError):
    pass


class MissingFrame(SeatrackError):
    def __init__(self, frame: int):
        super().__init__(f"no transform for frame {frame}")
        self.frame = frame


# motion
class InvalidMeasurement(SeatrackError):
    pass


class NumericalFailure(SeatrackError):
    pass


# appearance / association
class ZeroVector(ValidationError):
    pass


class NoObservations(SeatrackError):
    pass


class DimensionMismatch(SeatrackError):
    pass


class ShapeMismatch(SeatrackError):
    pass


# tracker
class NonMonotonicFrame(SeatrackError):
    pass


class StreamMisalignment(SeatrackError):
    pass


# metrics
class EmptyGroundTruth(SeatrackError):
    pass


class NoTruePositives(SeatrackError):
    pass


# papermath
class ZeroAlpha(SeatrackError):
    pass


class IndexOutOfRange(SeatrackError, IndexError):
    pass


class NonUnitVector(SeatrackError):
    pass


class NumericalSingularity(SeatrackError):
    pass


# sim / io
class ConfigInvalid(ValidationError):
    pass


class UnknownPreset(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NegativeDimensions(ValidationError):
    pass


class InconsistentDimension(ValidationError):
    pass


class IoFailure(SeatrackError):
    pass
