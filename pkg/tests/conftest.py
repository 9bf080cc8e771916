"""Shared fixtures, hypothesis profiles and the ``--runslow`` switch."""

import os

import numpy as np
import pytest
import torch
from hypothesis import HealthCheck, settings
from PIL import Image

from gcodec.compression import build_codec
from gcodec.models.config_models import CodecConfig, TrainConfig

settings.register_profile("ci", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", max_examples=15, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale reproductions")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def tiny_config():
    """Narrow codec that keeps every code path but runs in milliseconds."""
    return CodecConfig(base_channels=8, latent_channels=12, modulator_hidden=8)


@pytest.fixture
def tiny_codec(tiny_config):
    return build_codec(tiny_config, seed=0)


@pytest.fixture
def toy_batch():
    generator = torch.Generator().manual_seed(1)
    return torch.rand(2, 3, 32, 32, generator=generator)


@pytest.fixture
def toy_train_config():
    return TrainConfig(lambda_set=[0.01, 0.05], steps=3, batch_size=2, log_interval=1,
                       checkpoint_interval=100, distortion_scale=1.0, seed=0)


def write_image(path, height, width, seed=0):
    """Write a smooth random RGB image and return its path."""
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 256, size=(height // 4 + 1, width // 4 + 1, 3), dtype=np.uint8)
    img = Image.fromarray(base).resize((width, height), Image.BILINEAR)
    img.save(path)
    return path


@pytest.fixture
def image_dir(tmp_path):
    directory = tmp_path / "images"
    directory.mkdir()
    for i in range(2):
        write_image(directory / f"img{i}.png", 32, 48, seed=i)
    return directory
