"""
Validation utilities module.

This module provides validation functions for paths and for the tensor
shape contracts shared by the codec, the coder and the metrics.
"""

from pathlib import Path
from typing import Sequence

import torch

from ..errors import InvalidArgumentError, DataError


class PathValidator:
    """Validates file and directory paths."""

    @staticmethod
    def validate_directory(path: str) -> Path:
        """
        Validate that a path is an existing directory.

        Args:
            path: Path to validate

        Returns:
            The resolved path

        Raises:
            DataError: If the path is missing or not a directory
        """
        path_obj = Path(path).resolve()
        if not path_obj.exists():
            raise DataError(f"Path does not exist: {path}")
        if not path_obj.is_dir():
            raise DataError(f"Path is not a directory: {path}")
        return path_obj

    @staticmethod
    def validate_file(path: str) -> Path:
        """
        Validate that a path is an existing file.

        Args:
            path: Path to validate

        Returns:
            The resolved path

        Raises:
            DataError: If the path is missing or not a file
        """
        path_obj = Path(path).resolve()
        if not path_obj.exists():
            raise DataError(f"File does not exist: {path}")
        if not path_obj.is_file():
            raise DataError(f"Path is not a file: {path}")
        return path_obj


class TensorValidator:
    """Validates tensor shapes passed between codec components."""

    @staticmethod
    def validate_feature_map(x: torch.Tensor, name: str = "x") -> None:
        """Require a 4-D (batch, channel, height, width) tensor."""
        if not isinstance(x, torch.Tensor) or x.dim() != 4:
            raise InvalidArgumentError(f"{name} must be a 4-D (B, C, H, W) tensor")

    @staticmethod
    def validate_channels(x: torch.Tensor, channels: int, name: str = "x") -> None:
        """Require a feature map with the given channel count."""
        TensorValidator.validate_feature_map(x, name)
        if x.shape[1] != channels:
            raise InvalidArgumentError(f"{name} has {x.shape[1]} channels, expected {channels}")

    @staticmethod
    def validate_divisible(x: torch.Tensor, factor: int, name: str = "x") -> None:
        """Require spatial dims divisible by the total downsampling factor."""
        TensorValidator.validate_feature_map(x, name)
        height, width = x.shape[-2:]
        if height % factor or width % factor:
            raise InvalidArgumentError(
                f"{name} spatial dims {height}x{width} are not divisible by {factor}"
            )

    @staticmethod
    def validate_same_shape(a: torch.Tensor, b: torch.Tensor) -> None:
        """Require two tensors of identical shape."""
        if tuple(a.shape) != tuple(b.shape):
            raise InvalidArgumentError(f"Shape mismatch: {tuple(a.shape)} vs {tuple(b.shape)}")

    @staticmethod
    def validate_positive(value: float, name: str = "value") -> None:
        """Require a strictly positive finite scalar."""
        if not value > 0:
            raise InvalidArgumentError(f"{name} must be positive, got {value}")


def validate_lambdas(values: Sequence[float]) -> None:
    """Require a non-empty list of positive trade-off factors."""
    if not values:
        raise InvalidArgumentError("Lambda list must not be empty")
    for lam in values:
        TensorValidator.validate_positive(lam, "lambda")
