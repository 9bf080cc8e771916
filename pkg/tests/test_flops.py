"""Tests for the FLOP ledger."""

import pytest
import torch

from gcodec.compression.codec import LayerTrace
from gcodec.compression.gating import GateOutput
from gcodec.compression.modes import Mode
from gcodec.core.flops import (
    conv_flops,
    effective_flops,
    flop_reduction,
    flop_weighted_sparsity,
    merge_ledgers,
    module_overhead,
)
from gcodec.errors import InvalidArgumentError, InvalidStateError


def gated_trace(name, mask, cout=4, k=3, size=(8, 8), binary=True):
    mask = torch.as_tensor(mask, dtype=torch.float32)
    gate = GateOutput(masked_input=torch.zeros(1), mask=mask, importance=torch.zeros_like(mask),
                      energy=torch.zeros_like(mask), sparsity=float(1 - mask.mean()), binary=binary, layer=name)
    return LayerTrace(name=name, in_channels=mask.shape[1], out_channels=cout, kernel_size=k,
                      transposed=False, input_size=size, output_size=size, gate=gate)


def plain_trace(name, cin=3, cout=4, k=3, size=(8, 8)):
    return LayerTrace(name=name, in_channels=cin, out_channels=cout, kernel_size=k,
                      transposed=False, input_size=size, output_size=size)


class TestConvFlops:
    def test_single_mac(self):
        assert conv_flops(1, 1, 1, 1, 1) == 2

    def test_reference_layer(self):
        assert conv_flops(32, 32, 5, 16, 16) == 13_107_200

    def test_linear_in_each_channel_count(self):
        assert conv_flops(6, 4, 3, 8, 8) == 2 * conv_flops(3, 4, 3, 8, 8)
        assert conv_flops(3, 8, 3, 8, 8) == 2 * conv_flops(3, 4, 3, 8, 8)

    def test_negative_dimension(self):
        with pytest.raises(InvalidArgumentError):
            conv_flops(-1, 4, 3, 8, 8)


class TestLedger:
    def test_all_channels_active(self):
        ledger = effective_flops([plain_trace("a.0"), gated_trace("a.1", torch.ones(2, 4))])
        assert ledger.effective_total == ledger.baseline_total
        assert flop_reduction(ledger.baseline_total, ledger.effective_total) == 1.0
        assert flop_weighted_sparsity(ledger) == 0.0

    def test_half_the_channels(self):
        mask = torch.tensor([[1.0, 1.0, 0.0, 0.0], [0.0, 1.0, 0.0, 1.0]])
        ledger = effective_flops([gated_trace("a.1", mask)])
        assert flop_reduction(ledger.baseline_total, ledger.effective_total) == pytest.approx(2.0)
        assert ledger.entries[0].input_channels_active == 2.0
        assert flop_weighted_sparsity(ledger) == pytest.approx(0.5)

    def test_ungated_layer_keeps_baseline(self):
        ledger = effective_flops([plain_trace("a.0")])
        entry = ledger.entries[0]
        assert not entry.gated
        assert entry.effective_flops == entry.baseline_flops == conv_flops(3, 4, 3, 8, 8)

    def test_transposed_layer_counts_its_input_grid(self):
        trace = LayerTrace(name="g_s.0", in_channels=4, out_channels=4, kernel_size=5, transposed=True,
                           input_size=(2, 3), output_size=(4, 6))
        assert effective_flops([trace]).entries[0].baseline_flops == conv_flops(4, 4, 5, 2, 3)

    @pytest.mark.parametrize("factor", [2, 3])
    def test_reduction_ignores_spatial_size(self, factor):
        mask = torch.tensor([[1.0, 0.0, 1.0, 0.0], [1.0, 1.0, 0.0, 0.0]])

        def ledger(side):
            size = (side, side)
            return effective_flops([plain_trace("a.0", size=size), gated_trace("a.1", mask, size=size)])

        small, large = ledger(8), ledger(8 * factor)
        assert large.baseline_total == factor ** 2 * small.baseline_total
        assert flop_reduction(large.baseline_total, large.effective_total) == pytest.approx(
            flop_reduction(small.baseline_total, small.effective_total))

    def test_soft_mask_is_rejected(self):
        with pytest.raises(InvalidStateError):
            effective_flops([gated_trace("a.1", torch.full((1, 4), 0.5), binary=False)])

    def test_brute_force_recount(self, tiny_codec):
        with torch.no_grad():
            for gate in tiny_codec.gates():
                gate.alpha.uniform_(0.0, 0.5, generator=torch.Generator().manual_seed(4))
            fr = tiny_codec(torch.rand(2, 3, 32, 32), 0.01, Mode.EVAL)
        ledger = effective_flops(fr.traces)

        for trace, entry in zip(fr.traces, ledger.entries):
            height, width = trace.input_size if trace.transposed else trace.output_size
            per_sample = []
            for b in range(2):
                macs = 0
                for c in range(trace.in_channels):
                    if trace.gate is None or trace.gate.mask[b, c] == 1:
                        macs += trace.out_channels * trace.kernel_size ** 2 * height * width
                per_sample.append(2 * macs)
            assert entry.effective_flops == pytest.approx(sum(per_sample) / 2)

    def test_closed_gates_leave_only_ungated_layers(self, tiny_codec):
        with torch.no_grad():
            for gate in tiny_codec.gates():
                gate.alpha.fill_(1e6)
            fr = tiny_codec(torch.rand(1, 3, 32, 32), 0.01, Mode.EVAL)
        ledger = effective_flops(fr.traces)
        ungated = sum(e.baseline_flops for e in ledger.entries if not e.gated)

        assert ledger.effective_total == pytest.approx(ungated)
        assert flop_weighted_sparsity(ledger) == 1.0

    def test_zero_effective_flops_has_no_ratio(self):
        with pytest.raises(InvalidStateError):
            flop_reduction(100.0, 0.0)

    def test_reduction_ratio(self):
        assert flop_reduction(300.0, 100.0) == 3.0


class TestOverheadAndMerge:
    def test_gate_overhead_by_hand(self):
        trace = gated_trace("a.1", torch.ones(1, 4), size=(8, 8))
        elements = 4 * 8 * 8
        assert module_overhead([plain_trace("a.0"), trace]) == 3 * elements + 2 * 4 + 2 * 4

    def test_codec_overhead_includes_modulators(self, tiny_codec):
        with torch.no_grad():
            fr = tiny_codec(torch.rand(1, 3, 32, 32), 0.01, Mode.EVAL)
        without_codec = module_overhead(fr.traces)
        assert module_overhead(fr.traces, tiny_codec) > without_codec > 0

    def test_merge_sums_counts(self):
        full = effective_flops([gated_trace("a.1", torch.ones(1, 4))], module_overhead_flops=10.0)
        half = effective_flops([gated_trace("a.1", torch.tensor([[1.0, 0.0, 1.0, 0.0]]))], module_overhead_flops=5.0)
        merged = merge_ledgers([full, half])

        entry = merged.entries[0]
        assert entry.baseline_flops == 2 * full.entries[0].baseline_flops
        assert entry.effective_flops == full.entries[0].effective_flops + half.entries[0].effective_flops
        assert entry.input_channels_active == pytest.approx(3.0)
        assert merged.module_overhead_flops == 15.0

    def test_merge_needs_ledgers(self):
        with pytest.raises(InvalidArgumentError):
            merge_ledgers([])

    def test_csv_has_one_row_per_layer(self, tmp_path):
        ledger = effective_flops([plain_trace("a.0"), gated_trace("a.1", torch.ones(1, 4))])
        out = tmp_path / "ledger.csv"
        ledger.save_csv(str(out))
        lines = out.read_text().splitlines()
        assert lines[0].startswith("layer_id,gated")
        assert len(lines) == 3
