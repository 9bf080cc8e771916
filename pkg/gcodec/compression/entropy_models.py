"""
Entropy models for the main and hyper latents.

The main latent uses a conditional Gaussian convolved with the unit
quantization bin; the hyper latent uses a fully factorized prior whose
per-channel cumulative is a small monotone network. Both return per-element
likelihoods; the rate in bits is ``-sum(log2(likelihood))``.
"""

import math
from typing import Optional, Sequence, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .modes import Mode, as_mode
from ..utils.logging_config import get_logger
from ..utils.validators import TensorValidator

logger = get_logger("entropy")


def quantize(y: torch.Tensor, mode: Union[str, Mode], generator: Optional[torch.Generator] = None) -> torch.Tensor:
    """
    Quantization and its training surrogate.

    Args:
        y: Values to quantize
        mode: ``eval`` rounds to the nearest integer; ``train`` adds i.i.d.
            uniform noise on the open interval (-1/2, 1/2)
        generator: Optional RNG for the noise

    Returns:
        Tensor of the same shape as ``y``
    """
    if as_mode(mode) is Mode.EVAL:
        return torch.round(y)
    noise = torch.rand(y.shape, generator=generator, dtype=y.dtype, device=y.device) - 0.5
    # rand draws from [0, 1); drop the closed end so the support stays open
    noise = torch.where(noise == -0.5, torch.zeros_like(noise), noise)
    return y + noise


class LowerBound(torch.autograd.Function):
    """``max(x, bound)`` whose gradient still flows when it would raise ``x``."""

    @staticmethod
    def forward(ctx, inputs: torch.Tensor, bound: torch.Tensor) -> torch.Tensor:
        ctx.save_for_backward(inputs, bound)
        return torch.max(inputs, bound)

    @staticmethod
    def backward(ctx, grad_output: torch.Tensor):
        inputs, bound = ctx.saved_tensors
        pass_through = (inputs >= bound) | (grad_output < 0)
        return pass_through.type(grad_output.dtype) * grad_output, None


def lower_bound(x: torch.Tensor, bound: float) -> torch.Tensor:
    return LowerBound.apply(x, torch.tensor(bound, dtype=x.dtype, device=x.device))


def standard_normal_cdf(x: torch.Tensor) -> torch.Tensor:
    # erfc keeps precision in the left tail
    return 0.5 * torch.erfc(-(2 ** -0.5) * x)


def discretized_gaussian(values: torch.Tensor, scales: torch.Tensor,
                         means: Optional[torch.Tensor] = None) -> torch.Tensor:
    """
    Mass of N(mean, scale^2) on the unit bin centred at each value.

    Evaluated on the left tail (``-|v - mean|``) using the symmetry of the
    Gaussian. No flooring is applied.
    """
    if means is not None:
        values = values - means
    values = -values.abs()
    upper = standard_normal_cdf((values + 0.5) / scales)
    lower = standard_normal_cdf((values - 0.5) / scales)
    return upper - lower


class GaussianConditional(nn.Module):
    """Conditional Gaussian likelihood of the main latent."""

    def __init__(self, scale_floor: float = 0.11, likelihood_floor: float = 1e-9):
        super().__init__()
        self.scale_floor = float(scale_floor)
        self.likelihood_floor = float(likelihood_floor)
        self.diagnostics = {"nonpositive_scales": 0}

    def extra_repr(self) -> str:
        return f"scale_floor={self.scale_floor}, likelihood_floor={self.likelihood_floor}"

    def bound_scales(self, scales: torch.Tensor) -> torch.Tensor:
        """Clamp scales to the floor, counting non-positive raw values."""
        nonpositive = int((scales.detach() <= 0).sum())
        if nonpositive:
            self.diagnostics["nonpositive_scales"] += nonpositive
            logger.debug(f"Clamped {nonpositive} non-positive scales to {self.scale_floor}")
        return lower_bound(scales, self.scale_floor)

    def likelihood(self, y_hat: torch.Tensor, scales: torch.Tensor,
                   means: Optional[torch.Tensor] = None) -> torch.Tensor:
        """
        Per-element bin probability of ``y_hat``.

        Args:
            y_hat: Quantized (or noisy) latent
            scales: Predicted standard deviations, floored to ``scale_floor``
            means: Predicted means, or None for zero-mean

        Returns:
            Probabilities floored to ``likelihood_floor``
        """
        TensorValidator.validate_same_shape(y_hat, scales)
        if means is not None:
            TensorValidator.validate_same_shape(y_hat, means)
        probs = discretized_gaussian(y_hat, self.bound_scales(scales), means)
        return lower_bound(probs, self.likelihood_floor)

    forward = likelihood


class FactorizedPrior(nn.Module):
    """
    Fully factorized learned prior for the hyper latent.

    Each channel has its own cumulative ``c(t) = sigmoid(f(t))`` where ``f``
    is a chain of softplus-weighted matrices with tanh factors, monotone in
    ``t`` by construction. At init the logit slope is ``1 / init_scale``.
    """

    def __init__(self, channels: int, init_scale: float = 2.0, filters: Sequence[int] = (3, 3, 3),
                 likelihood_floor: float = 1e-9):
        super().__init__()
        self.channels = channels
        self.init_scale = float(init_scale)
        self.filters = tuple(int(f) for f in filters)
        self.likelihood_floor = float(likelihood_floor)

        widths = (1,) + self.filters + (1,)
        scale = self.init_scale ** (1 / (len(self.filters) + 1))

        self.matrices = nn.ParameterList()
        self.biases = nn.ParameterList()
        self.factors = nn.ParameterList()
        for i in range(len(self.filters) + 1):
            init = math.log(math.expm1(1 / scale / widths[i + 1]))
            self.matrices.append(nn.Parameter(torch.full((channels, widths[i + 1], widths[i]), init)))
            self.biases.append(nn.Parameter(torch.empty(channels, widths[i + 1], 1).uniform_(-0.5, 0.5)))
            if i < len(self.filters):
                self.factors.append(nn.Parameter(torch.zeros(channels, widths[i + 1], 1)))

    def extra_repr(self) -> str:
        return f"channels={self.channels}, init_scale={self.init_scale}, filters={self.filters}"

    def _logits_cumulative(self, inputs: torch.Tensor) -> torch.Tensor:
        # inputs: (C, 1, N)
        logits = inputs
        for i, matrix in enumerate(self.matrices):
            logits = F.softplus(matrix) @ logits + self.biases[i]
            if i < len(self.factors):
                logits = logits + torch.tanh(self.factors[i]) * torch.tanh(logits)
        return logits

    def logits(self, values: torch.Tensor) -> torch.Tensor:
        """Cumulative logits for a (B, C, H, W) tensor, same shape out."""
        transposed = values.transpose(0, 1)
        flat = transposed.reshape(self.channels, 1, -1)
        return self._logits_cumulative(flat).reshape_as(transposed).transpose(0, 1)

    def cdf(self, values: torch.Tensor) -> torch.Tensor:
        """Per-channel cumulative evaluated at ``values`` (B, C, H, W)."""
        return torch.sigmoid(self.logits(values))

    def unfloored_likelihood(self, z_hat: torch.Tensor) -> torch.Tensor:
        upper = self.logits(z_hat + 0.5)
        lower = self.logits(z_hat - 0.5)
        # difference taken in the left tail of the sigmoid
        sign = -torch.sign(upper + lower).detach()
        return torch.abs(torch.sigmoid(sign * upper) - torch.sigmoid(sign * lower))

    def likelihood(self, z_hat: torch.Tensor) -> torch.Tensor:
        """Per-element bin probability of ``z_hat``, floored to ``likelihood_floor``."""
        TensorValidator.validate_channels(z_hat, self.channels, "z_hat")
        return lower_bound(self.unfloored_likelihood(z_hat), self.likelihood_floor)

    forward = likelihood

    @torch.no_grad()
    def pmf_table(self, low: int, high: int) -> np.ndarray:
        """
        Bin probabilities of the integers ``low..high`` per channel.

        Returns:
            (C, high - low + 1) float64 array
        """
        support = torch.arange(low, high + 1, dtype=self.matrices[0].dtype)
        grid = support.view(1, 1, -1).expand(self.channels, 1, -1).contiguous()
        upper = self._logits_cumulative(grid + 0.5).double()
        lower = self._logits_cumulative(grid - 0.5).double()
        sign = -torch.sign(upper + lower)
        pmf = torch.abs(torch.sigmoid(sign * upper) - torch.sigmoid(sign * lower)).squeeze(1)
        return pmf.cpu().numpy()


def rate_bits(likelihoods: torch.Tensor) -> torch.Tensor:
    """Ideal code length ``-sum(log2(p))`` in bits."""
    return -torch.log2(likelihoods).sum()
