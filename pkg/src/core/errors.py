"""Error types shared by every COMET module.

Each error carries a stable ``code`` (printed by the CLI as
``code: message``) and the process ``exit_code`` the CLI returns for it.
"""


class CometError(ValueError):
    """Base class for all domain errors."""

    code = "comet_error"
    exit_code = 3


class InsufficientHistoryError(CometError):
    code = "insufficient_history"

    def __init__(self, required: int, available: int, what: str = "history"):
        self.required = int(required)
        self.available = int(available)
        super().__init__(
            f"insufficient {what}: need {self.required} values, have {self.available}")


class SeriesTooShortError(CometError):
    code = "series_too_short"


class SeriesFormatError(CometError):
    code = "malformed_series"


class DimensionMismatchError(CometError):
    code = "dimension_mismatch"


class MemoryTooSmallError(CometError):
    code = "memory_too_small"


class HorizonTooLongError(CometError):
    code = "horizon_exceeds_data"


class ModelFormatError(CometError):
    code = "model_format"


class BadMagicError(ModelFormatError):
    code = "bad_magic"

    def __init__(self, found: bytes):
        super().__init__(f"not a COMET model file (magic {found!r})")


class UnsupportedVersionError(ModelFormatError):
    code = "version_mismatch"


class TruncatedFileError(ModelFormatError):
    code = "truncated_file"

    def __init__(self, section: str, expected: int, actual: int):
        self.expected = int(expected)
        self.actual = int(actual)
        super().__init__(
            f"truncated file: {section} needs {self.expected} bytes, found {self.actual}")


class ConfigError(CometError):
    code = "config_error"
    exit_code = 2


class TrainingDivergedError(CometError):
    code = "numeric_divergence"
    exit_code = 4


class GradientCheckError(CometError):
    code = "gradient_check_failed"
    exit_code = 4
