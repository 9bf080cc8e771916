"""
Gated scale-hyperprior codec.

Four sub-networks (analysis ``g_a``, hyper analysis ``h_a``, hyper
synthesis ``h_s``, synthesis ``g_s``) of 4, 3, 3 and 4 convolutions. Every
layer except the first of each sub-network has a channel gate on its input,
ten gates in total. The bit-rate modulator pair sits between the analysis
transform and quantization and between dequantization and synthesis; the
hyper path is never modulated.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import torch
import torch.nn as nn

from .entropy_models import FactorizedPrior, GaussianConditional, quantize, rate_bits
from .gating import ChannelGate, GateOutput
from .modes import Mode, as_mode
from .modulator import Lambda, ModulatorPair, demodulate, modulate
from ..errors import InvalidArgumentError
from ..models.config_models import CodecConfig
from ..utils.logging_config import get_logger
from ..utils.validators import TensorValidator

logger = get_logger("codec")

DOWNSAMPLING = 16
HYPER_DOWNSAMPLING = 64


@dataclass
class LayerTrace:
    """Shape record of one convolution evaluated during a forward pass."""

    name: str
    in_channels: int
    out_channels: int
    kernel_size: int
    transposed: bool
    input_size: Tuple[int, int]
    output_size: Tuple[int, int]
    gate: Optional[GateOutput] = None

    @property
    def gated(self) -> bool:
        return self.gate is not None


@dataclass
class ForwardResult:
    """Everything one codec pass produces."""

    x_hat: torch.Tensor
    rate_bits_main: torch.Tensor
    rate_bits_hyper: torch.Tensor
    likelihoods: Dict[str, torch.Tensor]
    traces: List[LayerTrace]
    y: torch.Tensor
    y_mod: torch.Tensor
    y_hat: torch.Tensor
    z_hat: torch.Tensor
    scales: torch.Tensor
    means: Optional[torch.Tensor] = None
    symbols: Optional[Dict[str, torch.Tensor]] = None
    mode: Mode = Mode.EVAL

    @property
    def total_rate_bits(self) -> torch.Tensor:
        return self.rate_bits_main + self.rate_bits_hyper

    @property
    def gate_outputs(self) -> List[GateOutput]:
        return [t.gate for t in self.traces if t.gate is not None]

    @property
    def gate_sparsity(self) -> List[float]:
        """Per-gate sparsity, in layer order."""
        return [g.sparsity for g in self.gate_outputs]


def make_nonlinearity(name: str) -> nn.Module:
    if name == "gelu":
        return nn.GELU()
    if name == "softplus":
        return nn.Softplus()
    if name == "leaky_relu":
        return nn.LeakyReLU(0.01)
    if name == "relu":
        return nn.ReLU()
    raise InvalidArgumentError(f"Unknown nonlinearity: {name}")


def conv(in_channels: int, out_channels: int, kernel_size: int = 5, stride: int = 2) -> nn.Conv2d:
    return nn.Conv2d(in_channels, out_channels, kernel_size, stride=stride, padding=kernel_size // 2)


def deconv(in_channels: int, out_channels: int, kernel_size: int = 5, stride: int = 2) -> nn.ConvTranspose2d:
    return nn.ConvTranspose2d(in_channels, out_channels, kernel_size, stride=stride,
                              padding=kernel_size // 2, output_padding=stride - 1)


class GatedTransform(nn.Module):
    """A stack of convolutions with optional input gates and a shared nonlinearity."""

    def __init__(self, name: str, layers: List[nn.Module], nonlinearity: str):
        super().__init__()
        self.name = name
        self.layers = nn.ModuleList(layers)
        self.activation = make_nonlinearity(nonlinearity)
        self.gates = nn.ModuleDict()

    def add_gates(self, epsilon: float = 4.0, surrogate: str = "soft") -> None:
        """Guard the input of every layer but the first."""
        for index, layer in enumerate(self.layers):
            if index == 0:
                continue
            self.gates[str(index)] = ChannelGate(layer.in_channels, epsilon=epsilon,
                                                 surrogate=surrogate, name=self.layer_name(index))

    def layer_name(self, index: int) -> str:
        return f"{self.name}.{index}"

    def forward(self, x: torch.Tensor, mode: Mode = Mode.EVAL, traces: Optional[List[LayerTrace]] = None,
                bypass_gates: bool = False) -> torch.Tensor:
        last = len(self.layers) - 1
        for index, layer in enumerate(self.layers):
            gate_output = None
            key = str(index)
            if key in self.gates and not bypass_gates:
                gate_output = self.gates[key](x, mode)
                x_in = gate_output.masked_input
            else:
                x_in = x
            out = layer(x_in)
            if traces is not None:
                traces.append(LayerTrace(
                    name=self.layer_name(index),
                    in_channels=layer.in_channels,
                    out_channels=layer.out_channels,
                    kernel_size=layer.kernel_size[0],
                    transposed=isinstance(layer, nn.ConvTranspose2d),
                    input_size=(x_in.shape[-2], x_in.shape[-1]),
                    output_size=(out.shape[-2], out.shape[-1]),
                    gate=gate_output,
                ))
            x = self.activation(out) if index < last else out
        return x


class GatedHyperpriorCodec(nn.Module):
    """Hyperprior backbone with channel gates and a bit-rate modulator pair."""

    def __init__(self, cfg: CodecConfig):
        super().__init__()
        self.cfg = cfg
        n, m = cfg.base_channels, cfg.latent_channels
        hyper_out = 2 * m if cfg.entropy_mode == "mean_scale" else m

        # backbone first: gate and modulator options must not shift its initialization
        self.g_a = GatedTransform("g_a", [
            conv(cfg.image_channels, n), conv(n, n), conv(n, n), conv(n, m),
        ], cfg.nonlinearity)
        self.h_a = GatedTransform("h_a", [
            conv(m, n, kernel_size=3, stride=1), conv(n, n), conv(n, n),
        ], cfg.nonlinearity)
        self.h_s = GatedTransform("h_s", [
            deconv(n, n), deconv(n, n), conv(n, hyper_out, kernel_size=3, stride=1),
        ], cfg.nonlinearity)
        self.g_s = GatedTransform("g_s", [
            deconv(m, n), deconv(n, n), deconv(n, n), deconv(n, cfg.image_channels),
        ], cfg.nonlinearity)
        self.prior = FactorizedPrior(n, init_scale=cfg.prior_init_scale, likelihood_floor=cfg.likelihood_floor)
        self.gaussian = GaussianConditional(cfg.scale_floor, cfg.likelihood_floor)

        if cfg.gate_every_layer_except_first:
            for transform in self.transforms:
                transform.add_gates(cfg.gate_epsilon, cfg.gate_surrogate)

        self.modulator: Optional[ModulatorPair] = None
        if cfg.use_modulator:
            self.modulator = ModulatorPair(m, cfg.modulator_hidden, cfg.lambda_transform, cfg.tied_reciprocal)

    @property
    def transforms(self) -> List[GatedTransform]:
        return [self.g_a, self.h_a, self.h_s, self.g_s]

    def gates(self) -> List[ChannelGate]:
        """All channel gates in layer order."""
        return [gate for transform in self.transforms for gate in transform.gates.values()]

    def layer_names(self) -> List[str]:
        return [t.layer_name(i) for t in self.transforms for i in range(len(t.layers))]

    def parameter_groups(self) -> Dict[str, List[nn.Parameter]]:
        """Parameters split into backbone, gate and modulator groups."""
        gate_ids = {id(p) for gate in self.gates() for p in gate.parameters()}
        modulator_params = list(self.modulator.parameters()) if self.modulator is not None else []
        modulator_ids = {id(p) for p in modulator_params}
        backbone = [p for p in self.parameters() if id(p) not in gate_ids and id(p) not in modulator_ids]
        gates = [p for gate in self.gates() for p in gate.parameters()]
        return {"backbone": backbone, "gates": gates, "modulator": modulator_params}

    def modulate(self, y: torch.Tensor, lam: Lambda) -> torch.Tensor:
        return modulate(y, self.modulator, lam) if self.modulator is not None else y

    def demodulate(self, y_hat: torch.Tensor, lam: Lambda) -> torch.Tensor:
        return demodulate(y_hat, self.modulator, lam) if self.modulator is not None else y_hat

    def analysis(self, x: torch.Tensor, lam: Lambda, mode: Mode = Mode.EVAL,
                 traces: Optional[List[LayerTrace]] = None, bypass_gates: bool = False):
        """Gated analysis transform followed by the forward modulator; returns (y, y_mod)."""
        y = self.g_a(x, mode, traces, bypass_gates)
        return y, self.modulate(y, lam)

    def hyper_analysis(self, y_mod: torch.Tensor, mode: Mode = Mode.EVAL,
                       traces: Optional[List[LayerTrace]] = None, bypass_gates: bool = False) -> torch.Tensor:
        return self.h_a(torch.abs(y_mod), mode, traces, bypass_gates)

    def hyper_synthesis(self, z_hat: torch.Tensor, latent_size: Tuple[int, int], mode: Mode = Mode.EVAL,
                        traces: Optional[List[LayerTrace]] = None, bypass_gates: bool = False):
        """Predicted (scales, means) of the main latent, cropped to ``latent_size``."""
        params = self.h_s(z_hat, mode, traces, bypass_gates)
        params = params[..., :latent_size[0], :latent_size[1]]
        if self.cfg.entropy_mode == "mean_scale":
            scales, means = params.chunk(2, dim=1)
            return scales, means
        return params, None

    def synthesis(self, y_hat: torch.Tensor, lam: Lambda, mode: Mode = Mode.EVAL,
                  traces: Optional[List[LayerTrace]] = None, bypass_gates: bool = False) -> torch.Tensor:
        """Inverse modulator followed by the gated synthesis transform."""
        return self.g_s(self.demodulate(y_hat, lam), mode, traces, bypass_gates)

    def forward(self, x: torch.Tensor, lam: Lambda, mode: Union[str, Mode] = Mode.EVAL,
                generator: Optional[torch.Generator] = None, bypass_gates: bool = False) -> ForwardResult:
        """
        Run the full pipeline and estimate the rate.

        Args:
            x: (B, C, H, W) images with H and W divisible by 16
            lam: Trade-off factor fed to the modulator pair
            mode: ``train`` (noise, soft gates) or ``eval`` (rounding, hard gates)
            generator: RNG for the quantization noise
            bypass_gates: Skip every gate (plain hyperprior)

        Returns:
            ForwardResult
        """
        mode = as_mode(mode)
        TensorValidator.validate_channels(x, self.cfg.image_channels)
        TensorValidator.validate_divisible(x, DOWNSAMPLING)
        traces: List[LayerTrace] = []

        y, y_mod = self.analysis(x, lam, mode, traces, bypass_gates)
        z = self.hyper_analysis(y_mod, mode, traces, bypass_gates)
        z_hat = quantize(z, mode, generator)
        hyper_likelihood = self.prior.likelihood(z_hat)

        scales, means = self.hyper_synthesis(z_hat, (y.shape[-2], y.shape[-1]), mode, traces, bypass_gates)
        y_hat = quantize(y_mod, mode, generator)
        main_likelihood = self.gaussian.likelihood(y_hat, scales, means)

        x_hat = self.synthesis(y_hat, lam, mode, traces, bypass_gates)

        symbols = None
        if mode is Mode.EVAL:
            symbols = {"y": y_hat.detach().to(torch.int64), "z": z_hat.detach().to(torch.int64)}

        return ForwardResult(
            x_hat=x_hat,
            rate_bits_main=rate_bits(main_likelihood),
            rate_bits_hyper=rate_bits(hyper_likelihood),
            likelihoods={"y": main_likelihood, "z": hyper_likelihood},
            traces=traces,
            y=y,
            y_mod=y_mod,
            y_hat=y_hat,
            z_hat=z_hat,
            scales=scales,
            means=means,
            symbols=symbols,
            mode=mode,
        )


def build_codec(cfg: CodecConfig, seed: int = 0) -> GatedHyperpriorCodec:
    """
    Build a codec with deterministic initialization.

    The global torch RNG state is left untouched.

    Args:
        cfg: Architecture settings
        seed: Initialization seed

    Returns:
        GatedHyperpriorCodec in eval mode
    """
    if not isinstance(cfg, CodecConfig):
        raise InvalidArgumentError("build_codec expects a CodecConfig")
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        codec = GatedHyperpriorCodec(cfg)
    codec.eval()
    logger.debug(f"Built codec N={cfg.base_channels} M={cfg.latent_channels} "
                 f"gates={len(codec.gates())} modulator={cfg.use_modulator} seed={seed}")
    return codec
