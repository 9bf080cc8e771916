"""
Convolution FLOP accounting under channel gating.

One multiply-accumulate counts as two FLOPs and only convolution MACs enter
the ledger. A gated-off input channel removes its share of the consuming
layer's MACs. Transposed convolutions are counted over their input grid,
regular ones over their output grid.
"""

from typing import Iterable, List, Optional, Sequence

import torch

from ..compression.codec import GatedHyperpriorCodec, LayerTrace
from ..errors import InvalidArgumentError, InvalidStateError
from ..models.report_models import FlopLedger, FlopLedgerEntry


def conv_flops(c_in: int, c_out: int, k: int, h_out: int, w_out: int) -> int:
    """``2 * c_in * c_out * k^2 * h_out * w_out``."""
    for name, value in (("c_in", c_in), ("c_out", c_out), ("k", k), ("h_out", h_out), ("w_out", w_out)):
        if value < 0:
            raise InvalidArgumentError(f"{name} must be non-negative, got {value}")
    return 2 * c_in * c_out * k * k * h_out * w_out


def _grid(trace: LayerTrace):
    return trace.input_size if trace.transposed else trace.output_size


def _binary_mask(trace: LayerTrace) -> torch.Tensor:
    mask = trace.gate.mask.detach()
    if not trace.gate.binary or not bool(torch.all((mask == 0) | (mask == 1))):
        raise InvalidStateError(f"Layer {trace.name} has a non-binary mask; profile in eval mode")
    return mask


def effective_flops(traces: Sequence[LayerTrace], module_overhead_flops: float = 0.0) -> FlopLedger:
    """
    Per-layer FLOP ledger for one forward pass.

    For a gated layer the effective count is the baseline scaled by the mean
    fraction of active input channels over the batch; ungated layers keep
    their baseline.

    Args:
        traces: Layer traces of an eval-mode forward pass
        module_overhead_flops: Gate/modulator cost reported alongside

    Returns:
        FlopLedger with one entry per traced layer

    Raises:
        InvalidStateError: If a gate mask is not binary
    """
    entries: List[FlopLedgerEntry] = []
    for trace in traces:
        height, width = _grid(trace)
        baseline = conv_flops(trace.in_channels, trace.out_channels, trace.kernel_size, height, width)
        if trace.gated:
            mask = _binary_mask(trace)
            batch = mask.shape[0]
            active_total = int(mask.sum())
            per_channel = conv_flops(1, trace.out_channels, trace.kernel_size, height, width)
            effective = per_channel * active_total / batch
            active = active_total / batch
        else:
            effective = float(baseline)
            active = float(trace.in_channels)
        entries.append(FlopLedgerEntry(
            layer_id=trace.name,
            gated=trace.gated,
            input_channels=trace.in_channels,
            output_channels=trace.out_channels,
            kernel_size=trace.kernel_size,
            baseline_flops=float(baseline),
            effective_flops=float(effective),
            input_channels_active=float(active),
            output_height=trace.output_size[0],
            output_width=trace.output_size[1],
        ))
    return FlopLedger(entries=entries, module_overhead_flops=float(module_overhead_flops))


def flop_reduction(baseline: float, effective: float) -> float:
    """Baseline over effective FLOPs, e.g. 2.0 for a halved count."""
    if not effective > 0:
        raise InvalidStateError("Effective FLOPs must be positive to form a reduction ratio")
    return baseline / effective


def flop_weighted_sparsity(ledger: FlopLedger) -> float:
    """Input-channel sparsity of the gated layers, weighted by their baseline FLOPs."""
    gated = ledger.gated_entries
    weight = sum(e.baseline_flops for e in gated)
    if weight <= 0:
        return 0.0
    return sum(e.baseline_flops * e.sparsity for e in gated) / weight


def module_overhead(traces: Sequence[LayerTrace], codec: Optional[GatedHyperpriorCodec] = None) -> float:
    """
    Per-image FLOPs spent by the gates and the modulator pair.

    A gate squares and accumulates its input (2 per element), runs the
    cross-channel 1-D convolution (2k per channel), forms and tests the
    threshold (2 per channel) and masks the input (1 per element). Each
    modulator costs its two dense layers plus one multiply per latent element.
    """
    total = 0.0
    for trace in traces:
        if not trace.gated:
            continue
        elements = trace.in_channels * trace.input_size[0] * trace.input_size[1]
        kernel = _gate_kernel(codec, trace.name)
        total += 3 * elements + 2 * kernel * trace.in_channels + 2 * trace.in_channels
    if codec is not None and codec.modulator is not None:
        latent = next((t for t in traces if t.name == "g_a.3"), None)
        latent_elements = latent.out_channels * latent.output_size[0] * latent.output_size[1] if latent else 0
        modulators = [codec.modulator.bm] + ([] if codec.modulator.ibm is None else [codec.modulator.ibm])
        for modulator in modulators:
            total += 2 * (modulator.hidden + modulator.hidden * modulator.channels)
        total += 2 * latent_elements
    return float(total)


def _gate_kernel(codec: Optional[GatedHyperpriorCodec], layer_name: str) -> int:
    if codec is None:
        return 1
    for gate in codec.gates():
        if gate.name == layer_name:
            return gate.kernel_size
    return 1


def merge_ledgers(ledgers: Iterable[FlopLedger]) -> FlopLedger:
    """
    Sum per-layer counts over several passes (e.g. one per image).

    Active channel counts are recomputed from the summed FLOPs; output sizes
    are taken from the first ledger.
    """
    ledgers = list(ledgers)
    if not ledgers:
        raise InvalidArgumentError("No ledgers to merge")
    merged: List[FlopLedgerEntry] = []
    for position, first in enumerate(ledgers[0].entries):
        rows = [ledger.entries[position] for ledger in ledgers]
        baseline = sum(r.baseline_flops for r in rows)
        effective = sum(r.effective_flops for r in rows)
        active = first.input_channels * effective / baseline if baseline > 0 else float(first.input_channels)
        merged.append(FlopLedgerEntry(
            layer_id=first.layer_id,
            gated=first.gated,
            input_channels=first.input_channels,
            output_channels=first.output_channels,
            kernel_size=first.kernel_size,
            baseline_flops=baseline,
            effective_flops=effective,
            input_channels_active=active,
            output_height=first.output_height,
            output_width=first.output_width,
        ))
    overhead = sum(ledger.module_overhead_flops for ledger in ledgers)
    return FlopLedger(entries=merged, module_overhead_flops=overhead)
