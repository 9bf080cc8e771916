"""
Energy-based channel gating.

A gate sits in front of a convolution and zeroes whole input channels whose
pooled energy falls below a learnable, input-dependent threshold. The
threshold is ``omega * alpha`` where ``omega`` is an importance vector built
from the pooled energies by a 1-D convolution across neighbouring channels.
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

import torch
import torch.nn as nn

from .modes import Mode, as_mode
from ..errors import InvalidArgumentError, InvalidStateError
from ..utils.validators import TensorValidator


def adaptive_kernel_size(channels: int) -> int:
    """
    Kernel size of the cross-channel 1-D convolution.

    Nearest odd integer to ``|log2(C) / 2 + 1/2|``; exact midpoints between
    two odd integers round down.

    Args:
        channels: Number of channels the gate guards

    Returns:
        Odd kernel size >= 1
    """
    if channels < 1:
        raise InvalidArgumentError(f"channels must be >= 1, got {channels}")
    target = abs(math.log2(channels) / 2 + 0.5)
    k = 2 * math.ceil((target - 1) / 2 - 0.5) + 1
    return max(1, k)


def hard_gate(u: torch.Tensor) -> torch.Tensor:
    """Step function: 1 where ``u >= 0``, else 0."""
    return (u >= 0).to(u.dtype)


def soft_gate(u: torch.Tensor, epsilon: float) -> torch.Tensor:
    """Sigmoid surrogate ``1 / (1 + exp(-epsilon * u))`` of the step function."""
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    return torch.sigmoid(epsilon * u)


@dataclass
class GateOutput:
    """Result of gating one feature map."""

    masked_input: torch.Tensor
    mask: torch.Tensor
    importance: torch.Tensor
    energy: torch.Tensor
    sparsity: float
    binary: bool
    layer: str = ""


class ChannelGate(nn.Module):
    """
    Learnable channel gate for the input of one convolution layer.

    Holds the adjustment vector ``alpha`` (one entry per channel, zero at
    init so the gate starts as the identity), the shared 1-D convolution
    weights and the surrogate temperature.
    """

    def __init__(self, channels: int, epsilon: float = 4.0, kernel_size: Optional[int] = None,
                 surrogate: str = "soft", name: str = ""):
        super().__init__()
        if channels < 1:
            raise InvalidArgumentError(f"channels must be >= 1, got {channels}")
        if not epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
        kernel_size = adaptive_kernel_size(channels) if kernel_size is None else int(kernel_size)
        if kernel_size < 1 or kernel_size % 2 == 0:
            raise InvalidArgumentError(f"kernel_size must be odd and >= 1, got {kernel_size}")
        if surrogate not in ("soft", "straight_through"):
            raise InvalidArgumentError(f"Unknown gate surrogate: {surrogate}")

        self.channels = channels
        self.epsilon = float(epsilon)
        self.kernel_size = kernel_size
        self.surrogate = surrogate
        self.name = name

        self.alpha = nn.Parameter(torch.zeros(channels))
        self.conv = nn.Conv1d(1, 1, kernel_size=kernel_size, padding=(kernel_size - 1) // 2, bias=False)

    @property
    def conv1d_weights(self) -> torch.Tensor:
        return self.conv.weight.view(-1)

    def extra_repr(self) -> str:
        return f"channels={self.channels}, kernel_size={self.kernel_size}, epsilon={self.epsilon}"

    def pooled_energy(self, x: torch.Tensor) -> torch.Tensor:
        """Spatial mean of ``x**2`` per (sample, channel)."""
        return x.pow(2).mean(dim=(2, 3))

    def importance_from_energy(self, energy: torch.Tensor) -> torch.Tensor:
        """Sigmoid of the zero-padded 1-D convolution across channels."""
        return torch.sigmoid(self.conv(energy.unsqueeze(1))).squeeze(1)

    def forward(self, x: torch.Tensor, mode: Union[str, Mode] = Mode.EVAL) -> GateOutput:
        return apply_gate(x, self, mode)


def _check_channels(x: torch.Tensor, gate: ChannelGate) -> None:
    TensorValidator.validate_feature_map(x)
    if x.shape[1] != gate.alpha.numel():
        raise InvalidArgumentError(
            f"Input has {x.shape[1]} channels but the gate guards {gate.alpha.numel()}"
        )


def importance_vector(x: torch.Tensor, gate: ChannelGate) -> torch.Tensor:
    """
    Importance vector of a feature map.

    Args:
        x: (B, C, H, W) feature map
        gate: Gate whose 1-D convolution weights are used

    Returns:
        (B, C) tensor with entries in (0, 1)
    """
    _check_channels(x, gate)
    return gate.importance_from_energy(gate.pooled_energy(x))


def apply_gate(x: torch.Tensor, gate: ChannelGate, mode: Union[str, Mode] = Mode.EVAL) -> GateOutput:
    """
    Gate the channels of ``x``.

    The per-channel pooled energy is compared against ``omega * alpha``. Eval
    mode uses the hard step, train mode the sigmoid surrogate (or the hard
    value with surrogate gradient when the gate is straight-through).

    Args:
        x: (B, C, H, W) feature map
        gate: Gate parameters
        mode: ``train`` or ``eval``

    Returns:
        GateOutput with the masked input and the (B, C) mask
    """
    mode = as_mode(mode)
    _check_channels(x, gate)

    energy = gate.pooled_energy(x)
    omega = gate.importance_from_energy(energy)
    u = energy - omega * gate.alpha

    if mode is Mode.EVAL:
        mask = hard_gate(u)
        binary = True
    elif gate.surrogate == "straight_through":
        soft = soft_gate(u, gate.epsilon)
        mask = hard_gate(u) + (soft - soft.detach())
        binary = True
    else:
        mask = soft_gate(u, gate.epsilon)
        binary = False

    masked_input = x * mask[:, :, None, None]
    sparsity = float(1.0 - mask.detach().mean())
    return GateOutput(masked_input=masked_input, mask=mask, importance=omega, energy=energy,
                      sparsity=sparsity, binary=binary, layer=gate.name)


def measure_sparsity(g: GateOutput) -> float:
    """
    Fraction of (sample, channel) pairs gated to zero.

    Raises:
        InvalidStateError: If the mask is not binary (train-mode soft gate)
    """
    mask = g.mask.detach()
    if not g.binary or not bool(torch.all((mask == 0) | (mask == 1))):
        raise InvalidStateError("Sparsity is defined on binary (eval-mode) masks only")
    return float(1.0 - mask.mean())
