import dataclasses

import pytest
import torch

from gcodec.compression import (
    Bitstream, build_codec, compress_image, decompress_image, model_checksum,
)
from gcodec.compression.bitstream import MAGIC
from gcodec.compression.modes import Mode
from gcodec.core.metrics import bits_per_pixel
from gcodec.errors import DecodeError, InvalidArgumentError, UnsupportedFormatError, WrongModelError


@pytest.fixture
def image():
    return torch.rand(1, 3, 32, 32, generator=torch.Generator().manual_seed(4))


def test_round_trip_matches_eval_forward(tiny_codec, image):
    bs = compress_image(tiny_codec, image, 0.02)
    restored = decompress_image(tiny_codec, Bitstream.from_bytes(bs.to_bytes()))
    with torch.no_grad():
        expected = tiny_codec(image, 0.02, Mode.EVAL).x_hat
    assert torch.equal(restored, expected)


def test_round_trip_with_mean_scale_and_trained_looking_modulator(tiny_config, image):
    codec = build_codec(dataclasses.replace(tiny_config, entropy_mode="mean_scale"), seed=1)
    with torch.no_grad():
        codec.modulator.bm.fc2.bias.fill_(0.7)
        codec.modulator.ibm.fc2.bias.fill_(-0.7)
    restored = decompress_image(codec, compress_image(codec, image, 0.05))
    with torch.no_grad():
        expected = codec(image, 0.05, Mode.EVAL).x_hat
    assert torch.equal(restored, expected)


def test_compression_is_deterministic(tiny_codec, image):
    assert compress_image(tiny_codec, image, 0.01).to_bytes() == compress_image(tiny_codec, image, 0.01).to_bytes()


def test_payload_close_to_estimated_rate(tiny_codec):
    x = torch.rand(1, 3, 64, 64, generator=torch.Generator().manual_seed(2))
    with torch.no_grad():
        fr = tiny_codec(x, 0.01, Mode.EVAL)
    estimate = float(fr.total_rate_bits)
    elements = fr.y_hat.numel() + fr.z_hat.numel()
    bs = compress_image(tiny_codec, x, 0.01)
    payload_bits = 8 * (len(bs.payload_main) + len(bs.payload_hyper))
    # integer tables cost at most about one extra bit per element over the ideal code length
    assert payload_bits <= estimate + 2 * elements + 64 * 8
    assert bits_per_pixel(bs.size_bits, 64, 64) > bits_per_pixel(payload_bits, 64, 64)


def test_unpadded_image_is_cropped(tiny_codec):
    x = torch.rand(1, 3, 20, 37)
    bs = compress_image(tiny_codec, x, 0.01)
    assert bs.image_size == (20, 37)
    assert bs.padded_size == (32, 48)
    assert decompress_image(tiny_codec, bs).shape == x.shape


def test_header_fields(tiny_codec, image):
    bs = Bitstream.from_bytes(compress_image(tiny_codec, image, 0.125).to_bytes())
    assert bs.lam == 0.125
    assert bs.checksum == model_checksum(tiny_codec)
    assert bs.latent_shape == (12, 2, 2)
    assert bs.to_bytes()[:4] == MAGIC


def test_wrong_model(tiny_config, tiny_codec, image):
    bs = compress_image(tiny_codec, image, 0.01)
    other = build_codec(tiny_config, seed=99)
    with pytest.raises(WrongModelError):
        decompress_image(other, bs)


def test_corrupted_magic(tiny_codec, image):
    data = bytearray(compress_image(tiny_codec, image, 0.01).to_bytes())
    data[0:4] = b"XXXX"
    with pytest.raises(UnsupportedFormatError):
        Bitstream.from_bytes(bytes(data))


def test_unknown_version(tiny_codec, image):
    data = bytearray(compress_image(tiny_codec, image, 0.01).to_bytes())
    data[4:6] = (9).to_bytes(2, "big")
    with pytest.raises(UnsupportedFormatError):
        Bitstream.from_bytes(bytes(data))


def test_truncated_container(tiny_codec, image):
    data = compress_image(tiny_codec, image, 0.01).to_bytes()
    with pytest.raises(DecodeError):
        Bitstream.from_bytes(data[:-3])


def test_batch_rejected(tiny_codec):
    with pytest.raises(InvalidArgumentError):
        compress_image(tiny_codec, torch.rand(2, 3, 32, 32), 0.01)
