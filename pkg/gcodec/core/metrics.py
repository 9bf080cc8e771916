"""
Quality, rate and storage metrics.
"""

import math
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import torch

from ..compression.checkpoint import parameter_bytes
from ..errors import InvalidArgumentError
from ..utils.validators import TensorValidator

PSNR_CAP_DB = 100.0

ModelLike = Union[torch.nn.Module, Mapping[str, torch.Tensor], int]


def mse(x: torch.Tensor, x_hat: torch.Tensor) -> float:
    TensorValidator.validate_same_shape(x, x_hat)
    return float(torch.mean((x.detach().double() - x_hat.detach().double()) ** 2))


def psnr(x: torch.Tensor, x_hat: torch.Tensor) -> float:
    """
    Peak signal-to-noise ratio of [0, 1] images in dB.

    Lossless reconstructions report ``PSNR_CAP_DB``.

    Raises:
        InvalidArgumentError: On shape mismatch
    """
    error = mse(x, x_hat)
    if error == 0:
        return PSNR_CAP_DB
    return min(-10.0 * math.log10(error), PSNR_CAP_DB)


def bits_per_pixel(total_bits: float, width: int, height: int) -> float:
    """Total coded bits divided by the pixel count."""
    pixels = width * height
    if pixels <= 0:
        raise InvalidArgumentError(f"Image has no pixels ({width}x{height})")
    return float(total_bits) / pixels


def psnr_drop(reference_db: float, candidate_db: float) -> Tuple[float, float]:
    """Quality loss as absolute dB and as percent of the reference dB."""
    delta = reference_db - candidate_db
    percent = 100.0 * delta / reference_db if reference_db else 0.0
    return delta, percent


@dataclass
class StorageReport:
    """Parameter storage of fixed-rate models versus one variable-rate model."""

    per_model_bytes: List[int]
    variable_rate_bytes: int
    saving: float

    @property
    def fixed_rate_total_bytes(self) -> int:
        return sum(self.per_model_bytes)

    @property
    def variable_rate_megabytes(self) -> float:
        return self.variable_rate_bytes / (1024 * 1024)


def _model_bytes(model: ModelLike) -> int:
    if isinstance(model, int):
        return model
    return parameter_bytes(model)


def storage_report(states: Sequence[ModelLike], variable_rate_state: Optional[ModelLike] = None) -> StorageReport:
    """
    Storage saving of a single variable-rate model over a set of fixed-rate models.

    ``saving = 1 - variable_rate_bytes / sum(fixed_rate_bytes)``. Without an
    explicit variable-rate model the first entry of ``states`` plays that role.

    Args:
        states: Fixed-rate models (modules, state dicts or byte counts)
        variable_rate_state: The variable-rate model

    Returns:
        StorageReport
    """
    if not states:
        raise InvalidArgumentError("storage_report needs at least one model")
    per_model = [_model_bytes(s) for s in states]
    variable = _model_bytes(variable_rate_state) if variable_rate_state is not None else per_model[0]
    total = sum(per_model)
    saving = 1.0 - variable / total if total > 0 else 0.0
    return StorageReport(per_model_bytes=per_model, variable_rate_bytes=variable, saving=saving)
