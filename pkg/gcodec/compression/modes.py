"""Execution modes shared by gates, quantizers and the codec."""

from enum import Enum
from typing import Union

from ..errors import InvalidArgumentError


class Mode(str, Enum):
    """Train mode uses differentiable surrogates; eval mode the exact operations."""
    TRAIN = "train"
    EVAL = "eval"


def as_mode(mode: Union[str, Mode]) -> Mode:
    """Normalize a mode given as string or enum."""
    try:
        return Mode(mode)
    except ValueError:
        raise InvalidArgumentError(f"Mode must be 'train' or 'eval', got {mode!r}")
