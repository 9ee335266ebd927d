"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_INSUFFICIENT_DATA = 4
EXIT_SYNC = 5
EXIT_INTERNAL = 6


class GaitkitError(Exception):
    exit_code = EXIT_INTERNAL


class ConfigError(GaitkitError, ValueError):
    exit_code = EXIT_CONFIG


class DimensionalityError(ConfigError):
    """Two inputs that must share 2D/3D dimensionality do not."""


class ParseError(GaitkitError, ValueError):
    exit_code = EXIT_PARSE

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaMismatchError(ParseError):
    pass


class OrderingError(ParseError):
    pass


class RowLengthError(ParseError):
    pass


class InsufficientDataError(GaitkitError, ValueError):
    exit_code = EXIT_INSUFFICIENT_DATA


class EmptyInputError(InsufficientDataError):
    pass


class EmptyOverlapError(InsufficientDataError):
    pass


class MissingJointError(InsufficientDataError):
    def __init__(self, joint, message: str | None = None):
        self.joint = joint
        name = getattr(joint, "value", joint)
        super().__init__(message or f"missing joint: {name}")


class DegenerateGeometryError(InsufficientDataError):
    pass


class DegenerateFitError(InsufficientDataError):
    pass


class SequencingError(InsufficientDataError):
    """Gait events do not alternate heel strike / toe off."""


class RangeError(InsufficientDataError):
    pass


class InvalidFeatureError(InsufficientDataError):
    pass


class SyncError(GaitkitError):
    exit_code = EXIT_SYNC


class InsufficientLandmarksError(SyncError):
    pass


class InconsistentLandmarksError(SyncError):
    pass
