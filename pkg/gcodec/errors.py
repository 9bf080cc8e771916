"""
Error types for gcodec.

Every failure the toolkit raises on purpose derives from GcodecError and
carries an ErrorType plus the process exit code the CLI should use.
"""

from enum import Enum
from typing import Optional


EXIT_SUCCESS = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_MODEL_MISMATCH = 4


class ErrorType(Enum):
    """Kinds of errors raised by the codec, coder and training loop."""
    INVALID_ARGUMENT = "invalid_argument"
    INVALID_STATE = "invalid_state"
    ENCODE_RANGE = "encode_range"
    DECODE = "decode"
    DATA = "data"
    WRONG_MODEL = "wrong_model"
    UNSUPPORTED_FORMAT = "unsupported_format"
    DIVERGENCE = "divergence"


class GcodecError(Exception):
    """Base class for all gcodec errors."""

    error_type: ErrorType = ErrorType.INVALID_STATE
    exit_code: int = EXIT_USAGE


class InvalidArgumentError(GcodecError, ValueError):
    """An argument violates an operation's precondition."""
    error_type = ErrorType.INVALID_ARGUMENT
    exit_code = EXIT_USAGE


class InvalidStateError(GcodecError, RuntimeError):
    """An object is in a state that does not allow the operation."""
    error_type = ErrorType.INVALID_STATE
    exit_code = EXIT_USAGE


class EncodeRangeError(GcodecError):
    """A symbol falls outside the range of its CDF table."""
    error_type = ErrorType.ENCODE_RANGE
    exit_code = EXIT_DATA


class DecodeError(GcodecError):
    """A payload is truncated or does not decode under the given tables."""
    error_type = ErrorType.DECODE
    exit_code = EXIT_DATA


class DataError(GcodecError):
    """Input data could not be read or yielded nothing usable."""
    error_type = ErrorType.DATA
    exit_code = EXIT_DATA


class WrongModelError(GcodecError):
    """A bitstream was produced by a different checkpoint."""
    error_type = ErrorType.WRONG_MODEL
    exit_code = EXIT_MODEL_MISMATCH


class UnsupportedFormatError(GcodecError):
    """Bad magic bytes or an unknown container version."""
    error_type = ErrorType.UNSUPPORTED_FORMAT
    exit_code = EXIT_MODEL_MISMATCH


class DivergenceError(GcodecError):
    """Training produced a non-finite loss."""
    error_type = ErrorType.DIVERGENCE
    exit_code = EXIT_DATA

    def __init__(self, message: str, checkpoint_path: Optional[str] = None, step: Optional[int] = None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path
        self.step = step
