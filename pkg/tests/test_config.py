"""Tests for configuration loading, validation and override precedence."""

import json

import pytest

from gcodec.commands.common import parse_lambda_list, resolve_config
from gcodec.errors import InvalidArgumentError
from gcodec.models.config_models import (
    CodecConfig,
    Config,
    DataConfig,
    TrainConfig,
    config_from_dict,
    default_lambda_set,
    section_to_dict,
)


def test_defaults_without_a_file(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    config = Config.load()
    assert config.config_file is None
    assert config.train.stage == "joint"
    assert config.codec.base_channels == 32
    assert config.train.lambda_set == default_lambda_set()


def test_default_lambda_set_is_geometric():
    lambdas = default_lambda_set()
    assert len(lambdas) == 8
    assert lambdas[0] == pytest.approx(1e-3)
    assert lambdas[-1] == pytest.approx(2e-1)
    ratios = [b / a for a, b in zip(lambdas, lambdas[1:])]
    assert max(ratios) == pytest.approx(min(ratios))


def test_explicit_missing_file(tmp_path):
    with pytest.raises(InvalidArgumentError):
        Config.load(str(tmp_path / "missing.json"))


def test_invalid_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    with pytest.raises(InvalidArgumentError):
        Config.load(str(path))


def test_unknown_section_and_key():
    with pytest.raises(InvalidArgumentError):
        Config.from_dict({"server": {}})
    with pytest.raises(InvalidArgumentError):
        Config.from_dict({"train": {"epochs": 3}})


@pytest.mark.parametrize("section,values", [
    (TrainConfig, {"lambda_set": []}),
    (TrainConfig, {"lambda_set": [0.01, -0.1]}),
    (TrainConfig, {"stage": "pretrain"}),
    (TrainConfig, {"stage": "fixed_rate", "lambda_set": [0.01, 0.02]}),
    (TrainConfig, {"freeze_backbone": True}),
    (TrainConfig, {"gamma": -1.0}),
    (TrainConfig, {"optimizer": "lbfgs"}),
    (TrainConfig, {"steps": -1}),
    (CodecConfig, {"entropy_mode": "laplacian"}),
    (CodecConfig, {"latent_channels": 0}),
    (CodecConfig, {"likelihood_floor": 1.0}),
    (DataConfig, {"patch_size": 40}),
    (DataConfig, {"scales": [0]}),
])
def test_invalid_values(section, values):
    with pytest.raises(InvalidArgumentError):
        section(**values)


def test_save_and_load(tmp_path):
    config = Config.from_dict({"codec": {"base_channels": 16}, "train": {"steps": 7, "lambda_set": [0.02]}})
    path = tmp_path / "nested" / "config.json"
    config.save(str(path))

    loaded = Config.load(str(path))
    assert loaded.to_dict() == config.to_dict()
    assert loaded.config_file == str(path)
    assert json.loads(path.read_text())["train"]["steps"] == 7


def test_overrides_parse_json_values():
    config = Config().apply_overrides([
        "train.steps=25",
        "train.lambda_set=[0.01, 0.1]",
        "codec.entropy_mode=mean_scale",
        "codec.use_modulator=false",
    ])
    assert config.train.steps == 25
    assert config.train.lambda_set == [0.01, 0.1]
    assert config.codec.entropy_mode == "mean_scale"
    assert config.codec.use_modulator is False


@pytest.mark.parametrize("override", ["train.steps", "train.epochs=3", "trainer.steps=3", "steps=3"])
def test_bad_overrides(override):
    with pytest.raises(InvalidArgumentError):
        Config().apply_overrides([override])


def test_override_revalidates():
    with pytest.raises(InvalidArgumentError):
        Config().apply_overrides(["data.patch_size=50"])


class TestPrecedence:
    """File values lose to --set, which loses to dedicated flags."""

    @pytest.fixture
    def file_config(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"train": {"steps": 10, "seed": 1}}))
        return Config.load(str(path))

    def test_file_only(self, file_config):
        config = resolve_config(file_config, [])
        assert (config.train.steps, config.train.seed) == (10, 1)

    def test_set_beats_file(self, file_config):
        config = resolve_config(file_config, ["train.steps=20"])
        assert (config.train.steps, config.train.seed) == (20, 1)

    def test_flag_beats_set(self, file_config):
        config = resolve_config(file_config, ["train.steps=20"], train__steps=30)
        assert config.train.steps == 30

    def test_unset_flag_is_ignored(self, file_config):
        config = resolve_config(file_config, ["train.seed=5"], train__steps=None, train__seed=None)
        assert (config.train.steps, config.train.seed) == (10, 5)

    def test_flags_are_validated_together(self, file_config):
        config = resolve_config(file_config, [], train__stage="fixed_rate", train__lambda_set=[0.05])
        assert config.train.stage == "fixed_rate"
        assert config.train.lambda_set == [0.05]

    def test_set_and_flags_are_validated_together(self, file_config):
        # fixed_rate alone conflicts with the default lambda set
        config = resolve_config(file_config, ["train.stage=fixed_rate"], train__lambda_set=[0.05])
        assert (config.train.stage, config.train.lambda_set) == ("fixed_rate", [0.05])


def test_parse_lambda_list():
    assert parse_lambda_list("0.001, 0.01,0.1") == [0.001, 0.01, 0.1]
    assert parse_lambda_list(None) is None
    with pytest.raises(InvalidArgumentError):
        parse_lambda_list("0.1,high")
    with pytest.raises(InvalidArgumentError):
        parse_lambda_list(",")


def test_section_round_trip():
    codec = CodecConfig(base_channels=8, entropy_mode="mean_scale")
    assert config_from_dict(CodecConfig, section_to_dict(codec)) == codec
    with pytest.raises(InvalidArgumentError):
        config_from_dict(CodecConfig, {"width": 3})
    with pytest.raises(InvalidArgumentError):
        section_to_dict({"base_channels": 8})
