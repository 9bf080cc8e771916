"""
Bit-rate modulator.

Maps a trade-off factor λ to a positive channel-wise scaling vector
``exp(fc2(ReLU(fc1(t(λ)))))``. The forward modulator scales the latent
before quantization; the inverse modulator undoes it before synthesis.
With ``fc2`` zeroed both vectors are exactly one, so a pair can be dropped
into a pretrained fixed-rate codec without changing its output.
"""

import math
from typing import Optional, Union

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import InvalidArgumentError
from ..utils.validators import TensorValidator

Lambda = Union[float, torch.Tensor]


def _lambda_value(lam: Lambda) -> float:
    value = float(lam.detach()) if isinstance(lam, torch.Tensor) else float(lam)
    if not value > 0 or math.isinf(value):
        raise InvalidArgumentError(f"lambda must be a positive finite number, got {value}")
    return value


class BitrateModulator(nn.Module):
    """Two fully-connected layers from a scalar λ to ``channels`` positive gains."""

    def __init__(self, channels: int, hidden: int = 64, lambda_transform: str = "log"):
        super().__init__()
        if channels < 1 or hidden < 1:
            raise InvalidArgumentError("channels and hidden must be >= 1")
        if lambda_transform not in ("raw", "log"):
            raise InvalidArgumentError(f"Unknown lambda transform: {lambda_transform}")
        self.channels = channels
        self.hidden = hidden
        self.lambda_transform = lambda_transform

        self.fc1 = nn.Linear(1, hidden)
        self.fc2 = nn.Linear(hidden, channels)
        nn.init.zeros_(self.fc2.weight)
        nn.init.zeros_(self.fc2.bias)

    def extra_repr(self) -> str:
        return f"channels={self.channels}, hidden={self.hidden}, lambda_transform={self.lambda_transform}"

    def transformed_input(self, lam: Lambda) -> torch.Tensor:
        """λ as the (1, 1) input of the first layer."""
        _lambda_value(lam)
        t = torch.as_tensor(lam, dtype=self.fc1.weight.dtype, device=self.fc1.weight.device).reshape(1, 1)
        return torch.log(t) if self.lambda_transform == "log" else t

    def forward(self, lam: Lambda) -> torch.Tensor:
        hidden = F.relu(self.fc1(self.transformed_input(lam)))
        return torch.exp(self.fc2(hidden)).view(-1)


def modulation_vector(params: BitrateModulator, lam: Lambda) -> torch.Tensor:
    """
    Evaluate a modulator at λ.

    Args:
        params: Modulator weights
        lam: Trade-off factor, must be > 0

    Returns:
        Vector of ``params.channels`` strictly positive gains
    """
    return params(lam)


class ModulatorPair(nn.Module):
    """
    Forward and inverse modulators sharing hidden size and channel count.

    With ``tied_reciprocal`` the inverse is the elementwise reciprocal of
    the forward vector and no inverse weights exist.
    """

    def __init__(self, channels: int, hidden: int = 64, lambda_transform: str = "log",
                 tied_reciprocal: bool = False):
        super().__init__()
        self.channels = channels
        self.tied_reciprocal = tied_reciprocal
        self.bm = BitrateModulator(channels, hidden, lambda_transform)
        self.ibm: Optional[BitrateModulator] = (
            None if tied_reciprocal else BitrateModulator(channels, hidden, lambda_transform)
        )

    def bm_vector(self, lam: Lambda) -> torch.Tensor:
        return self.bm(lam)

    def ibm_vector(self, lam: Lambda) -> torch.Tensor:
        if self.tied_reciprocal:
            return torch.reciprocal(self.bm(lam))
        return self.ibm(lam)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def _scale_channels(y: torch.Tensor, vector: torch.Tensor, channels: int, name: str) -> torch.Tensor:
    TensorValidator.validate_feature_map(y, name)
    if y.shape[1] != channels:
        raise InvalidArgumentError(f"{name} has {y.shape[1]} channels, modulator expects {channels}")
    return y * vector.view(1, -1, 1, 1)


def modulate(y: torch.Tensor, pair: ModulatorPair, lam: Lambda) -> torch.Tensor:
    """Channel-wise product of the latent with ``bm(λ)``."""
    return _scale_channels(y, pair.bm_vector(lam), pair.channels, "y")


def demodulate(y_mod: torch.Tensor, pair: ModulatorPair, lam: Lambda) -> torch.Tensor:
    """Channel-wise product with ``ibm(λ)`` (or ``1 / bm(λ)`` when tied)."""
    return _scale_channels(y_mod, pair.ibm_vector(lam), pair.channels, "y_mod")


def modulator_parameter_count(channels: int, hidden: int = 64, tied_reciprocal: bool = False) -> int:
    """Parameters added by a modulator pair: ``2 * (2h + h*C + C)`` when untied."""
    single = hidden + hidden + hidden * channels + channels
    return single if tied_reciprocal else 2 * single
