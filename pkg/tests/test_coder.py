import numpy as np
import pytest
import torch
from hypothesis import given, strategies as st

from gcodec.compression.coder import (
    RangeDecoder, build_cdf, build_cdfs, cross_entropy_bits, decode_latent, encode_latent,
    gaussian_tables, prior_tables, range_decode, range_encode,
)
from gcodec.compression.entropy_models import FactorizedPrior
from gcodec.errors import DecodeError, EncodeRangeError, InvalidArgumentError


def test_uniform_table():
    table = build_cdf([0.25] * 4)
    assert table.frequencies.tolist() == [16384] * 4
    assert table.total == 1 << 16


def test_rare_symbol_keeps_frequency():
    table = build_cdf([0.999, 0.001], precision=8)
    assert table.frequencies[1] >= 1
    assert table.total == 256


def test_zero_probability_raised_to_one():
    table = build_cdf([1.0, 0.0, 0.0])
    assert table.frequencies.min() >= 1 and table.total == 1 << 16


@given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=1, max_size=40))
def test_frequencies_reconstruct_probabilities(weights):
    probs = np.asarray(weights) / np.sum(weights)
    table = build_cdf(probs)
    assert table.total == 1 << 16
    assert np.all(table.frequencies >= 1)
    tolerance = len(probs) / (1 << 16) + 1e-9
    assert np.all(np.abs(table.frequencies / table.total - probs) <= tolerance)


def test_build_cdf_errors():
    with pytest.raises(InvalidArgumentError):
        build_cdf([])
    with pytest.raises(InvalidArgumentError):
        build_cdf([0.7, 0.7])


def test_build_cdfs_escape_table():
    tables = build_cdfs(np.array([[0.5, 0.25, 0.0]]), [2], [-1], escape=True)
    table = tables[0]
    assert table.num_symbols == 2
    assert table.max_symbol == 0
    assert len(table.cdf) == 4


def test_empty_sequence_flush_overhead():
    assert len(range_encode([], [])) <= 8
    assert range_decode(b"", [], 0) == []


def test_uniform_four_symbol_rate():
    rng = np.random.default_rng(0)
    table = build_cdf([0.25] * 4)
    symbols = rng.integers(0, 4, size=10_000).tolist()
    data = range_encode(symbols, [table] * len(symbols))
    assert abs(len(data) - 2500) <= 40
    assert range_decode(data, [table] * len(symbols), len(symbols)) == symbols


@given(st.data())
def test_round_trip_random_tables(data):
    count = data.draw(st.integers(min_value=1, max_value=60))
    tables = []
    symbols = []
    for _ in range(count):
        weights = data.draw(st.lists(st.floats(min_value=0.001, max_value=1.0), min_size=1, max_size=12))
        offset = data.draw(st.integers(min_value=-20, max_value=20))
        table = build_cdf(np.asarray(weights) / sum(weights), offset=offset, escape=True)
        tables.append(table)
        symbols.append(data.draw(st.integers(min_value=offset - 300, max_value=offset + 300)))
    encoded = range_encode(symbols, tables)
    assert range_decode(encoded, tables, count) == symbols


def test_out_of_range_without_escape():
    with pytest.raises(EncodeRangeError):
        range_encode([5], [build_cdf([0.5, 0.5])])


def test_truncated_payload_raises():
    table = build_cdf([0.25] * 4)
    symbols = list(range(4)) * 50
    data = range_encode(symbols, [table] * len(symbols))
    with pytest.raises(DecodeError):
        range_decode(data[:10], [table] * len(symbols), len(symbols))


def test_mismatched_table_never_crashes():
    skewed = build_cdf([0.9, 0.05, 0.05])
    uniform = build_cdf([0.25] * 4)
    symbols = [0, 1, 2, 0, 0, 1] * 20
    data = range_encode(symbols, [skewed] * len(symbols))
    try:
        decoded = range_decode(data, [uniform] * len(symbols), len(symbols))
        assert len(decoded) == len(symbols)
    except DecodeError:
        pass


def test_decoder_reads_whole_header_from_short_stream():
    with pytest.raises(DecodeError):
        RangeDecoder(b"\x00")


def test_cross_entropy_close_to_actual_size():
    table = build_cdf([0.7, 0.2, 0.1])
    rng = np.random.default_rng(1)
    symbols = rng.choice(3, size=5000, p=[0.7, 0.2, 0.1]).tolist()
    bits = cross_entropy_bits(symbols, [table] * len(symbols))
    data = range_encode(symbols, [table] * len(symbols))
    assert abs(8 * len(data) - bits) <= 0.01 * bits + 64


def test_gaussian_tables_cover_mean():
    scales = torch.tensor([0.5, 2.0, 30.0])
    means = torch.tensor([0.0, -3.4, 10.0])
    tables = gaussian_tables(scales, means)
    assert len(tables) == 3
    for table, mu, sigma in zip(tables, means.tolist(), scales.tolist()):
        assert table.escape
        assert table.offset <= mu - 16 * sigma + 1
        assert table.max_symbol >= mu + 16 * sigma - 1


def test_latent_round_trip_with_escapes():
    scales = torch.full((1, 2, 3, 3), 0.5)
    symbols = torch.zeros(1, 2, 3, 3)
    symbols[0, 0, 0, 0] = 500.0
    symbols[0, 1, 2, 2] = -77.0
    tables = gaussian_tables(scales)
    decoded = decode_latent(encode_latent(symbols, tables), symbols.shape, tables)
    assert torch.equal(decoded, symbols)


def test_prior_tables_per_channel_round_trip():
    prior = FactorizedPrior(3)
    tables = prior_tables(prior)
    assert len(tables) == 3
    assert tables[0].offset == -64 and tables[0].max_symbol == 64
    z = torch.tensor([[[[0.0, 1.0]], [[-2.0, 90.0]], [[3.0, -100.0]]]])
    decoded = decode_latent(encode_latent(z, tables, per_channel=True), z.shape, tables, per_channel=True)
    assert torch.equal(decoded, z)
