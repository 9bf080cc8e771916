import math

import pytest
import torch
from hypothesis import given, strategies as st

from gcodec.compression.modulator import (
    BitrateModulator, ModulatorPair, demodulate, modulate, modulation_vector, modulator_parameter_count,
)
from gcodec.errors import InvalidArgumentError

lambdas = st.floats(min_value=1e-4, max_value=10.0, allow_nan=False)


@given(lambdas)
def test_zero_initialized_modulator_is_all_ones(lam):
    vector = modulation_vector(BitrateModulator(12, hidden=8), lam)
    assert torch.equal(vector, torch.ones(12))


@given(lambdas, st.integers(min_value=0, max_value=1000))
def test_vector_strictly_positive(lam, seed):
    torch.manual_seed(seed)
    modulator = BitrateModulator(6, hidden=4)
    torch.nn.init.normal_(modulator.fc2.weight)
    assert bool(torch.all(modulator(lam) > 0))


def test_hand_evaluated_vector():
    modulator = BitrateModulator(5, hidden=1, lambda_transform="raw")
    with torch.no_grad():
        modulator.fc1.weight.fill_(1.0)
        modulator.fc1.bias.zero_()
        modulator.fc2.weight.fill_(1.0)
        modulator.fc2.bias.zero_()
    vector = modulator(0.5)
    assert vector.tolist() == pytest.approx([math.exp(0.5)] * 5, abs=1e-4)


@pytest.mark.parametrize("lam", [0.0, -1.0, float("inf")])
def test_rejects_invalid_lambda(lam):
    with pytest.raises(InvalidArgumentError):
        BitrateModulator(4)(lam)


def test_tensor_lambda_accepted():
    modulator = BitrateModulator(4)
    assert torch.equal(modulator(torch.tensor(0.01)), modulator(0.01))


def test_neutral_pair_is_identity():
    pair = ModulatorPair(8, hidden=4)
    y = torch.randn(2, 8, 3, 3)
    assert torch.equal(modulate(y, pair, 0.02), y)
    assert torch.equal(demodulate(y, pair, 0.02), y)


def test_modulate_broadcasts_per_channel():
    pair = ModulatorPair(3, hidden=2)
    with torch.no_grad():
        pair.bm.fc2.bias.copy_(torch.log(torch.tensor([2.0, 3.0, 0.5])))
    y = torch.full((1, 3, 2, 2), 4.0)
    out = modulate(y, pair, 0.1)
    for c, scale in enumerate([2.0, 3.0, 0.5]):
        assert torch.allclose(out[0, c], torch.full((2, 2), 4.0 * scale))


def test_tied_reciprocal_round_trip():
    torch.manual_seed(3)
    pair = ModulatorPair(6, hidden=4, tied_reciprocal=True)
    torch.nn.init.normal_(pair.bm.fc2.weight, std=0.5)
    assert pair.ibm is None
    y = torch.randn(2, 6, 4, 4)
    recovered = demodulate(modulate(y, pair, 0.03), pair, 0.03)
    assert torch.allclose(recovered, y, rtol=1e-6, atol=1e-7)


def test_channel_mismatch_rejected():
    with pytest.raises(InvalidArgumentError):
        modulate(torch.randn(1, 5, 2, 2), ModulatorPair(4), 0.1)


@pytest.mark.parametrize("channels, hidden, tied", [(48, 64, False), (12, 8, False), (48, 64, True)])
def test_parameter_count_formula(channels, hidden, tied):
    pair = ModulatorPair(channels, hidden, tied_reciprocal=tied)
    assert pair.parameter_count() == modulator_parameter_count(channels, hidden, tied)


def test_desk_pair_size():
    assert modulator_parameter_count(48, 64) == 2 * (64 + 64 + 64 * 48 + 48)


def test_modulator_gradient_matches_finite_differences():
    torch.manual_seed(0)
    modulator = BitrateModulator(3, hidden=4).double()
    torch.nn.init.normal_(modulator.fc2.weight, std=0.3)

    def loss():
        return (modulator(0.02) * torch.arange(1.0, 4.0, dtype=torch.float64)).sum()

    loss().backward()
    analytic = modulator.fc2.weight.grad.clone()
    step = 1e-6
    for index in [(0, 0), (1, 2), (2, 3)]:
        with torch.no_grad():
            modulator.fc2.weight[index] += step
            plus = float(loss())
            modulator.fc2.weight[index] -= 2 * step
            minus = float(loss())
            modulator.fc2.weight[index] += step
        assert analytic[index].item() == pytest.approx((plus - minus) / (2 * step), rel=1e-3, abs=1e-9)
