"""Compression components: gating, modulation, entropy models, codec and coder."""

from .modes import Mode, as_mode
from .gating import (
    ChannelGate, GateOutput, adaptive_kernel_size, apply_gate, hard_gate,
    importance_vector, measure_sparsity, soft_gate,
)
from .modulator import (
    BitrateModulator, ModulatorPair, demodulate, modulate, modulation_vector,
    modulator_parameter_count,
)
from .entropy_models import (
    FactorizedPrior, GaussianConditional, LowerBound, discretized_gaussian, quantize, rate_bits,
)
from .codec import ForwardResult, GatedHyperpriorCodec, LayerTrace, build_codec
from .coder import CdfTable, build_cdf, build_cdfs, range_decode, range_encode
from .checkpoint import LoadedCheckpoint, load_checkpoint, model_checksum, parameter_bytes, save_checkpoint
from .bitstream import Bitstream, compress_image, decompress_image

__all__ = [
    'Mode', 'as_mode',
    'ChannelGate', 'GateOutput', 'adaptive_kernel_size', 'apply_gate', 'hard_gate',
    'importance_vector', 'measure_sparsity', 'soft_gate',
    'BitrateModulator', 'ModulatorPair', 'demodulate', 'modulate', 'modulation_vector',
    'modulator_parameter_count',
    'FactorizedPrior', 'GaussianConditional', 'LowerBound', 'discretized_gaussian', 'quantize', 'rate_bits',
    'ForwardResult', 'GatedHyperpriorCodec', 'LayerTrace', 'build_codec',
    'CdfTable', 'build_cdf', 'build_cdfs', 'range_decode', 'range_encode',
    'LoadedCheckpoint', 'load_checkpoint', 'model_checksum', 'parameter_bytes', 'save_checkpoint',
    'Bitstream', 'compress_image', 'decompress_image',
]
