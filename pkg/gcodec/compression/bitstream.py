"""
Bitstream container and the image-level compress/decompress pipeline.

Layout (big-endian)::

    magic "GCV1" | version u16 | model checksum u64 | lambda f64
    | image h, w u32 | padded h, w u32 | latent c, h, w u16 | hyper c, h, w u16
    | hyper payload length u32 | hyper payload | main payload length u32 | main payload
"""

import struct
from dataclasses import dataclass
from typing import Tuple

import torch

from .checkpoint import model_checksum
from .codec import DOWNSAMPLING, GatedHyperpriorCodec
from .coder import decode_latent, encode_latent, gaussian_tables, prior_tables
from ..errors import DecodeError, InvalidArgumentError, UnsupportedFormatError, WrongModelError
from ..utils.image_io import crop, pad_to_multiple
from ..utils.logging_config import get_logger
from ..utils.validators import TensorValidator

logger = get_logger("bitstream")

MAGIC = b"GCV1"
BITSTREAM_VERSION = 1
_HEADER = struct.Struct(">4sHQdIIIIHHHHHH")
_LENGTH = struct.Struct(">I")


@dataclass
class Bitstream:
    """Self-describing compressed image."""

    checksum: int
    lam: float
    image_size: Tuple[int, int]
    padded_size: Tuple[int, int]
    latent_shape: Tuple[int, int, int]
    hyper_shape: Tuple[int, int, int]
    payload_hyper: bytes
    payload_main: bytes
    version: int = BITSTREAM_VERSION

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(MAGIC, self.version, self.checksum, float(self.lam),
                              *self.image_size, *self.padded_size, *self.latent_shape, *self.hyper_shape)
        return b"".join([
            header,
            _LENGTH.pack(len(self.payload_hyper)), self.payload_hyper,
            _LENGTH.pack(len(self.payload_main)), self.payload_main,
        ])

    @classmethod
    def from_bytes(cls, data: bytes) -> 'Bitstream':
        """
        Parse a container.

        Raises:
            UnsupportedFormatError: Bad magic or unknown version
            DecodeError: Truncated container
        """
        if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
            raise UnsupportedFormatError("Not a GCV1 bitstream (bad magic)")
        if len(data) < _HEADER.size:
            raise DecodeError("Bitstream header is truncated")
        fields = _HEADER.unpack_from(data, 0)
        version = fields[1]
        if version != BITSTREAM_VERSION:
            raise UnsupportedFormatError(f"Bitstream version {version} is not supported")

        position = _HEADER.size
        payloads = []
        for _ in range(2):
            if position + _LENGTH.size > len(data):
                raise DecodeError("Bitstream payload length is truncated")
            (length,) = _LENGTH.unpack_from(data, position)
            position += _LENGTH.size
            if position + length > len(data):
                raise DecodeError("Bitstream payload is truncated")
            payloads.append(bytes(data[position:position + length]))
            position += length

        return cls(
            checksum=fields[2],
            lam=fields[3],
            image_size=(fields[4], fields[5]),
            padded_size=(fields[6], fields[7]),
            latent_shape=(fields[8], fields[9], fields[10]),
            hyper_shape=(fields[11], fields[12], fields[13]),
            payload_hyper=payloads[0],
            payload_main=payloads[1],
            version=version,
        )

    @property
    def size_bytes(self) -> int:
        return len(self.to_bytes())

    @property
    def size_bits(self) -> int:
        return 8 * self.size_bytes

    @property
    def pixel_count(self) -> int:
        return self.image_size[0] * self.image_size[1]


@torch.no_grad()
def compress_image(codec: GatedHyperpriorCodec, x: torch.Tensor, lam: float) -> Bitstream:
    """
    Compress one image with real range coding.

    The image is reflect-padded to a multiple of 16; the header keeps the
    original size. Hyper symbols are coded under the factorized prior, main
    symbols under Gaussian tables rebuilt from the decoded hyper latent.

    Args:
        codec: Trained codec
        x: (1, C, H, W) image in [0, 1]
        lam: Trade-off factor fed to the modulator pair

    Returns:
        Bitstream
    """
    TensorValidator.validate_channels(x, codec.cfg.image_channels)
    if x.shape[0] != 1:
        raise InvalidArgumentError("compress_image codes one image at a time")
    lam = float(lam)
    if not lam > 0:
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")
    codec.eval()

    x_padded, image_size = pad_to_multiple(x, DOWNSAMPLING)
    y, y_mod = codec.analysis(x_padded, lam)
    z_hat = torch.round(codec.hyper_analysis(y_mod))
    payload_hyper = encode_latent(z_hat, prior_tables(codec.prior), per_channel=True)

    scales, means = codec.hyper_synthesis(z_hat, (y.shape[-2], y.shape[-1]))
    scales = torch.clamp(scales, min=codec.gaussian.scale_floor)
    y_hat = torch.round(y_mod)
    payload_main = encode_latent(y_hat, gaussian_tables(scales, means))

    bitstream = Bitstream(
        checksum=model_checksum(codec),
        lam=lam,
        image_size=image_size,
        padded_size=(x_padded.shape[-2], x_padded.shape[-1]),
        latent_shape=tuple(y_hat.shape[1:]),
        hyper_shape=tuple(z_hat.shape[1:]),
        payload_hyper=payload_hyper,
        payload_main=payload_main,
    )
    logger.debug(f"Compressed {image_size[0]}x{image_size[1]} image at lambda={lam}: "
                 f"{len(payload_hyper)} + {len(payload_main)} payload bytes")
    return bitstream


@torch.no_grad()
def decompress_image(codec: GatedHyperpriorCodec, bs: Bitstream) -> torch.Tensor:
    """
    Reconstruct the image stored in a bitstream.

    Raises:
        WrongModelError: The bitstream was produced by another model
        DecodeError: Corrupt payload
    """
    checksum = model_checksum(codec)
    if bs.checksum != checksum:
        raise WrongModelError(
            f"Bitstream was produced by model {bs.checksum:016x}, loaded model is {checksum:016x}"
        )
    codec.eval()

    z_hat = decode_latent(bs.payload_hyper, (1, *bs.hyper_shape), prior_tables(codec.prior), per_channel=True)
    scales, means = codec.hyper_synthesis(z_hat, bs.latent_shape[1:])
    scales = torch.clamp(scales, min=codec.gaussian.scale_floor)
    y_hat = decode_latent(bs.payload_main, (1, *bs.latent_shape), gaussian_tables(scales, means))
    x_hat = codec.synthesis(y_hat, bs.lam)
    return crop(x_hat, bs.image_size)
