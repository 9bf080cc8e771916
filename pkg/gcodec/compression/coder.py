"""
Integer range coder and CDF tables.

The coder is a classic 32-bit arithmetic coder over big-endian bit I/O.
Frequencies come from ``CdfTable`` objects whose total is ``2**precision``.
Tables built with ``escape=True`` carry one extra symbol; a value outside
the table range is coded as that escape symbol followed by a sign bit and an
Elias-gamma magnitude, all through an equiprobable binary table.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch

from .entropy_models import FactorizedPrior
from ..errors import DecodeError, EncodeRangeError, InvalidArgumentError
from ..utils.logging_config import get_logger

logger = get_logger("coder")

STATE_BITS = 32
DEFAULT_PRECISION = 16
GAUSSIAN_TAIL_SIGMAS = 16
GAUSSIAN_MAX_HALF_WIDTH = 2048
PRIOR_SUPPORT = 64
MAX_GAMMA_BITS = 62
TABLE_CHUNK = 512


@dataclass
class CdfTable:
    """
    Cumulative frequencies of one coding context.

    ``cdf[0] == 0`` and ``cdf[-1] == 2**precision``. Symbol ``offset + i``
    owns the interval ``[cdf[i], cdf[i+1])``. With ``escape`` the last
    interval belongs to the escape symbol.
    """

    cdf: np.ndarray
    offset: int = 0
    precision: int = DEFAULT_PRECISION
    escape: bool = False

    @property
    def num_symbols(self) -> int:
        """Regular (non-escape) symbols covered by the table."""
        return len(self.cdf) - 1 - (1 if self.escape else 0)

    @property
    def max_symbol(self) -> int:
        return self.offset + self.num_symbols - 1

    @property
    def frequencies(self) -> np.ndarray:
        return np.diff(self.cdf)

    @property
    def total(self) -> int:
        return int(self.cdf[-1])


BINARY_TABLE = CdfTable(np.array([0, 1 << 15, 1 << 16], dtype=np.int64), offset=0)


def _largest_remainder(probs: np.ndarray, valid: np.ndarray, total: int) -> np.ndarray:
    """Round normalized rows to integer frequencies summing to ``total``, each valid entry >= 1."""
    rows, width = probs.shape
    scaled = probs * total
    freq = np.floor(scaled).astype(np.int64)
    freq[~valid] = 0
    remainder = total - freq.sum(axis=1)

    frac = np.where(valid, scaled - freq, -1.0)
    order = np.argsort(-frac, axis=1, kind="stable")
    ranks = np.empty_like(order)
    ranks[np.arange(rows)[:, None], order] = np.arange(width)[None, :]
    freq += ((ranks < remainder[:, None]) & valid).astype(np.int64)

    zeros = (freq == 0) & valid
    if zeros.any():
        freq[zeros] = 1
        excess = zeros.sum(axis=1)
        top = np.argmax(freq, axis=1)
        freq[np.arange(rows), top] -= excess
        for r in np.nonzero(freq[np.arange(rows), top] < 1)[0]:
            # rare: the largest entry cannot absorb the excess alone
            freq[r, top[r]] += excess[r]
            needed = int(excess[r])
            while needed > 0:
                i = int(np.argmax(freq[r]))
                take = min(needed, int(freq[r, i]) - 1)
                if take <= 0:
                    raise InvalidArgumentError("Too many symbols for the coder precision")
                freq[r, i] -= take
                needed -= take
    return freq


def build_cdfs(probabilities: np.ndarray, lengths: Sequence[int], offsets: Sequence[int],
               precision: int = DEFAULT_PRECISION, escape: bool = False) -> List[CdfTable]:
    """
    Build many CDF tables at once.

    Args:
        probabilities: (rows, width) array; row ``r`` uses its first ``lengths[r]`` entries
        lengths: Regular symbol count per row
        offsets: Smallest symbol per row
        precision: Frequency total is ``2**precision``
        escape: Append an escape symbol carrying ``1 - sum(p)``

    Returns:
        One CdfTable per row
    """
    probs = np.asarray(probabilities, dtype=np.float64)
    if probs.ndim != 2:
        raise InvalidArgumentError("probabilities must be a 2-D array")
    lengths = np.asarray(lengths, dtype=np.int64)
    rows, width = probs.shape
    if rows == 0:
        return []
    if np.any(lengths < 1) or np.any(lengths > width):
        raise InvalidArgumentError("Every table needs at least one symbol")
    if not 1 <= precision <= 24:
        raise InvalidArgumentError(f"precision must be in [1, 24], got {precision}")

    valid = np.arange(width)[None, :] < lengths[:, None]
    probs = np.where(valid, np.clip(probs, 0.0, None), 0.0)
    sums = probs.sum(axis=1)
    if np.any(sums > 1 + 1e-6):
        raise InvalidArgumentError("Probabilities sum to more than 1")

    if escape:
        tail = np.clip(1.0 - sums, 0.0, None)
        probs = np.concatenate([probs, np.zeros((rows, 1))], axis=1)
        probs[np.arange(rows), lengths] = tail
        valid = np.concatenate([valid, np.zeros((rows, 1), dtype=bool)], axis=1)
        valid[np.arange(rows), lengths] = True
        lengths = lengths + 1
        sums = probs.sum(axis=1)

    total = 1 << precision
    if np.any(lengths > total):
        raise InvalidArgumentError("More symbols than the coder precision allows")
    zero_rows = sums <= 0
    if np.any(zero_rows):
        probs[zero_rows] = valid[zero_rows].astype(np.float64)
        sums = probs.sum(axis=1)
    probs = probs / sums[:, None]

    freq = _largest_remainder(probs, valid, total)
    cdfs = np.concatenate([np.zeros((rows, 1), dtype=np.int64), np.cumsum(freq, axis=1)], axis=1)
    offsets = np.asarray(offsets, dtype=np.int64)
    return [CdfTable(cdfs[r, :lengths[r] + 1].copy(), int(offsets[r]), precision, escape) for r in range(rows)]


def build_cdf(probabilities: Sequence[float], precision: int = DEFAULT_PRECISION,
              offset: int = 0, escape: bool = False) -> CdfTable:
    """
    Integer CDF table from per-symbol probabilities.

    Frequencies are proportional to the probabilities (normalized over the
    range), every symbol keeps a frequency of at least one and the total is
    exactly ``2**precision``.

    Raises:
        InvalidArgumentError: On an empty range or probabilities summing past 1
    """
    probs = np.asarray(probabilities, dtype=np.float64).reshape(-1)
    if probs.size == 0:
        raise InvalidArgumentError("Cannot build a CDF over an empty symbol range")
    return build_cdfs(probs[None, :], [probs.size], [offset], precision, escape)[0]


class BitOutputStream:
    """Big-endian bit writer; the last byte is zero-padded."""

    def __init__(self):
        self.buffer = bytearray()
        self.current = 0
        self.filled = 0

    def write(self, bit: int) -> None:
        self.current = (self.current << 1) | bit
        self.filled += 1
        if self.filled == 8:
            self.buffer.append(self.current)
            self.current = 0
            self.filled = 0

    def getvalue(self) -> bytes:
        data = bytearray(self.buffer)
        if self.filled:
            data.append(self.current << (8 - self.filled))
        return bytes(data)


class BitInputStream:
    """Big-endian bit reader that refuses to read past the end."""

    def __init__(self, data: bytes):
        self.data = data
        self.position = 0

    def read(self) -> int:
        byte_index = self.position >> 3
        if byte_index >= len(self.data):
            raise DecodeError("Payload ended before all symbols were decoded")
        bit = (self.data[byte_index] >> (7 - (self.position & 7))) & 1
        self.position += 1
        return bit


class _CoderState:
    """Interval state shared by encoder and decoder."""

    full_range = 1 << STATE_BITS
    half_range = full_range >> 1
    quarter_range = half_range >> 1
    state_mask = full_range - 1

    def __init__(self):
        self.low = 0
        self.high = self.state_mask

    def update(self, table: CdfTable, index: int) -> None:
        span = self.high - self.low + 1
        total = int(table.cdf[-1])
        sym_low = int(table.cdf[index])
        sym_high = int(table.cdf[index + 1])
        self.high = self.low + sym_high * span // total - 1
        self.low = self.low + sym_low * span // total

        while ((self.low ^ self.high) & self.half_range) == 0:
            self.shift()
            self.low = (self.low << 1) & self.state_mask
            self.high = ((self.high << 1) & self.state_mask) | 1

        while (self.low & ~self.high & self.quarter_range) != 0:
            self.underflow()
            self.low = (self.low << 1) ^ self.half_range
            self.high = ((self.high ^ self.half_range) << 1) | self.half_range | 1

    def shift(self) -> None:
        raise NotImplementedError

    def underflow(self) -> None:
        raise NotImplementedError


class RangeEncoder(_CoderState):
    """Encodes symbols into an in-memory byte string."""

    def __init__(self):
        super().__init__()
        self.output = BitOutputStream()
        self.pending = 0

    def shift(self) -> None:
        bit = self.low >> (STATE_BITS - 1)
        self.output.write(bit)
        for _ in range(self.pending):
            self.output.write(bit ^ 1)
        self.pending = 0

    def underflow(self) -> None:
        self.pending += 1

    def encode_index(self, table: CdfTable, index: int) -> None:
        self.update(table, index)

    def encode(self, symbol: int, table: CdfTable) -> None:
        """Encode one symbol, escaping it when it lies outside the table."""
        index = symbol - table.offset
        if 0 <= index < table.num_symbols:
            self.encode_index(table, index)
            return
        if not table.escape:
            raise EncodeRangeError(
                f"Symbol {symbol} outside table range [{table.offset}, {table.max_symbol}]"
            )
        self.encode_index(table, table.num_symbols)
        if index < 0:
            self.encode_index(BINARY_TABLE, 0)
            self._encode_gamma(-index)
        else:
            self.encode_index(BINARY_TABLE, 1)
            self._encode_gamma(index - table.num_symbols + 1)

    def _encode_gamma(self, magnitude: int) -> None:
        width = magnitude.bit_length()
        for _ in range(width - 1):
            self.encode_index(BINARY_TABLE, 0)
        for shift in range(width - 1, -1, -1):
            self.encode_index(BINARY_TABLE, (magnitude >> shift) & 1)

    def finish(self) -> bytes:
        """
        Terminate the stream.

        Writes a one followed by the pending underflow bits and enough zeros
        that the decoder's look-ahead never runs past the payload.
        """
        self.output.write(1)
        for _ in range(self.pending):
            self.output.write(0)
        self.pending = 0
        for _ in range(STATE_BITS - 1):
            self.output.write(0)
        return self.output.getvalue()


class RangeDecoder(_CoderState):
    """Decodes symbols from a byte string produced by ``RangeEncoder``."""

    def __init__(self, data: bytes):
        super().__init__()
        self.input = BitInputStream(data)
        self.code = 0
        for _ in range(STATE_BITS):
            self.code = (self.code << 1) | self.input.read()

    def shift(self) -> None:
        self.code = ((self.code << 1) & self.state_mask) | self.input.read()

    def underflow(self) -> None:
        self.code = (self.code & self.half_range) | ((self.code << 1) & (self.state_mask >> 1)) | self.input.read()

    def decode_index(self, table: CdfTable) -> int:
        if not self.low <= self.code <= self.high:
            raise DecodeError("Decoder state left its interval; payload or tables do not match")
        total = int(table.cdf[-1])
        span = self.high - self.low + 1
        value = ((self.code - self.low + 1) * total - 1) // span
        if not 0 <= value < total:
            raise DecodeError("Decoded value outside the table total")
        index = int(np.searchsorted(table.cdf, value, side="right")) - 1
        self.update(table, index)
        return index

    def decode(self, table: CdfTable) -> int:
        """Decode one symbol, resolving escapes."""
        index = self.decode_index(table)
        if not table.escape or index < table.num_symbols:
            return table.offset + index
        sign = self.decode_index(BINARY_TABLE)
        magnitude = self._decode_gamma()
        if sign == 0:
            return table.offset - magnitude
        return table.max_symbol + magnitude

    def _decode_gamma(self) -> int:
        zeros = 0
        while self.decode_index(BINARY_TABLE) == 0:
            zeros += 1
            if zeros > MAX_GAMMA_BITS:
                raise DecodeError("Escape magnitude too long")
        magnitude = 1
        for _ in range(zeros):
            magnitude = (magnitude << 1) | self.decode_index(BINARY_TABLE)
        return magnitude


def range_encode(symbols: Sequence[int], cdfs: Sequence[CdfTable]) -> bytes:
    """
    Encode symbols, each under its own table.

    Args:
        symbols: Integer symbols
        cdfs: One table reference per symbol (references may repeat)

    Returns:
        Deterministic byte string
    """
    if len(symbols) != len(cdfs):
        raise InvalidArgumentError(f"{len(symbols)} symbols but {len(cdfs)} tables")
    encoder = RangeEncoder()
    for symbol, table in zip(symbols, cdfs):
        encoder.encode(int(symbol), table)
    return encoder.finish()


def range_decode(data: bytes, cdfs: Sequence[CdfTable], count: int) -> List[int]:
    """
    Decode ``count`` symbols encoded under the same table sequence.

    Raises:
        DecodeError: On truncated or inconsistent payloads
    """
    if count < 0 or count > len(cdfs):
        raise InvalidArgumentError(f"count {count} does not match {len(cdfs)} tables")
    if count == 0:
        return []
    decoder = RangeDecoder(bytes(data))
    return [decoder.decode(cdfs[i]) for i in range(count)]


def cross_entropy_bits(symbols: Sequence[int], cdfs: Sequence[CdfTable]) -> float:
    """Ideal code length of ``symbols`` under the quantized table probabilities."""
    bits = 0.0
    for symbol, table in zip(symbols, cdfs):
        index = int(symbol) - table.offset
        freq = int(table.cdf[index + 1] - table.cdf[index])
        bits -= np.log2(freq / table.total)
    return float(bits)


@torch.no_grad()
def gaussian_tables(scales: torch.Tensor, means: Optional[torch.Tensor] = None,
                    precision: int = DEFAULT_PRECISION) -> List[CdfTable]:
    """
    One escape table per latent element, in row-major order.

    Each table covers the integers within ``mean ± 16 * scale`` with the
    discretized Gaussian bin masses; the remaining mass goes to the escape.
    Scales are expected already floored.
    """
    sigma = scales.detach().reshape(-1).to(torch.float64)
    mu = means.detach().reshape(-1).to(torch.float64) if means is not None else torch.zeros_like(sigma)
    half_width = torch.clamp(torch.ceil(GAUSSIAN_TAIL_SIGMAS * sigma), max=GAUSSIAN_MAX_HALF_WIDTH)
    low = torch.floor(mu) - half_width
    high = torch.ceil(mu) + half_width
    lengths = (high - low + 1).to(torch.int64)

    tables: List[CdfTable] = []
    for start in range(0, sigma.numel(), TABLE_CHUNK):
        stop = min(start + TABLE_CHUNK, sigma.numel())
        chunk_len = lengths[start:stop]
        width = int(chunk_len.max())
        grid = low[start:stop, None] + torch.arange(width, dtype=torch.float64)[None, :]
        centred = -(grid - mu[start:stop, None]).abs()
        s = sigma[start:stop, None]
        probs = torch.special.ndtr((centred + 0.5) / s) - torch.special.ndtr((centred - 0.5) / s)
        valid = torch.arange(width)[None, :] < chunk_len[:, None]
        probs = torch.where(valid, probs, torch.zeros_like(probs))
        probs = probs / torch.clamp(probs.sum(dim=1, keepdim=True), min=1.0)
        tables.extend(build_cdfs(probs.numpy(), chunk_len.numpy(), low[start:stop].to(torch.int64).numpy(),
                                 precision, escape=True))
    return tables


@torch.no_grad()
def prior_tables(prior: FactorizedPrior, precision: int = DEFAULT_PRECISION,
                 support: int = PRIOR_SUPPORT) -> List[CdfTable]:
    """One escape table per hyper-latent channel over ``[-support, support]``."""
    pmf = prior.pmf_table(-support, support)
    pmf = pmf / np.maximum(pmf.sum(axis=1, keepdims=True), 1.0)
    width = pmf.shape[1]
    return build_cdfs(pmf, [width] * prior.channels, [-support] * prior.channels, precision, escape=True)


def _element_tables(shape: torch.Size, tables: Sequence[CdfTable], per_channel: bool) -> List[CdfTable]:
    if not per_channel:
        return list(tables)
    batch, channels, height, width = shape
    if len(tables) != channels:
        raise InvalidArgumentError(f"{len(tables)} channel tables for {channels} channels")
    spatial = height * width
    return [tables[c] for _ in range(batch) for c in range(channels) for _ in range(spatial)]


def encode_latent(symbols: torch.Tensor, tables: Sequence[CdfTable], per_channel: bool = False) -> bytes:
    """
    Encode an integer (B, C, H, W) latent.

    Args:
        symbols: Integer-valued tensor
        tables: One table per element (row-major), or one per channel with ``per_channel``
        per_channel: Share each channel's table across batch and space

    Returns:
        Encoded payload
    """
    element_tables = _element_tables(symbols.shape, tables, per_channel)
    values = symbols.detach().reshape(-1).to(torch.int64).tolist()
    return range_encode(values, element_tables)


def decode_latent(data: bytes, shape: Sequence[int], tables: Sequence[CdfTable],
                  per_channel: bool = False) -> torch.Tensor:
    """Inverse of ``encode_latent``; returns a float32 tensor of ``shape``."""
    shape = torch.Size(shape)
    element_tables = _element_tables(shape, tables, per_channel)
    values = range_decode(data, element_tables, shape.numel())
    return torch.tensor(values, dtype=torch.float32).reshape(shape)
