"""Exception types raised across the package."""


class GridcastError(Exception):
    """Base class for all package errors."""


# frames and windows
class LengthMismatch(GridcastError, ValueError):
    pass


class NonMonotonicTimestamps(GridcastError, ValueError):
    pass


class DuplicateChannel(GridcastError, ValueError):
    pass


class TooShort(GridcastError, ValueError):
    pass


class MissingFeature(GridcastError, KeyError):
    pass


class NonFiniteWindow(GridcastError, ValueError):
    pass


# preprocessing
class EmptyFrame(GridcastError, ValueError):
    pass


class GroupTooLarge(GridcastError, ValueError):
    pass


class MissingChannel(GridcastError, KeyError):
    pass


class InsufficientData(GridcastError, ValueError):
    pass


class DegenerateDesign(GridcastError, ValueError):
    pass


class MissingTemperature(GridcastError, KeyError):
    pass


class ZeroVariance(GridcastError, ValueError):
    pass


class ConstantChannel(GridcastError, ValueError):
    pass


class UnknownChannel(GridcastError, KeyError):
    pass


class MissingTargetStats(GridcastError, KeyError):
    pass


# network and training
class DimensionMismatch(GridcastError, ValueError):
    pass


class EmptyBatch(GridcastError, ValueError):
    pass


class CacheMismatch(GridcastError, ValueError):
    pass


class ShapeMismatch(GridcastError, ValueError):
    pass


class EmptySet(GridcastError, ValueError):
    pass


# forecasting
class ScalerMissingChannel(GridcastError, KeyError):
    pass


class ImputerMissingChannel(GridcastError, KeyError):
    pass


class NonFiniteOutput(GridcastError, FloatingPointError):
    pass


class InvalidRequest(GridcastError, ValueError):
    pass


class BadLength(GridcastError, ValueError):
    pass


# metrics
class Empty(GridcastError, ValueError):
    pass


class NonPositiveEps(GridcastError, ValueError):
    pass


class ZeroRange(GridcastError, ValueError):
    pass


# files and cli
class ParseError(GridcastError, ValueError):
    def __init__(self, line: int, column: int, message: str = ""):
        self.line = line
        self.column = column
        detail = f": {message}" if message else ""
        super().__init__(f"line {line}, column {column}{detail}")


class SchemaError(GridcastError, ValueError):
    pass


class MissingArtifact(GridcastError, FileNotFoundError):
    pass


class ConfigError(GridcastError, ValueError):
    pass
