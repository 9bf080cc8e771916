"""
Configuration models for gcodec.

This module contains the dataclass configuration tree (logging, codec,
training, evaluation and data settings) together with JSON persistence
and dotted ``key=value`` overrides.
"""

import json
import math
from dataclasses import dataclass, field, fields, asdict, is_dataclass
from pathlib import Path
from typing import Optional, List, Dict, Any

from ..errors import InvalidArgumentError


ENTROPY_MODES = ('scale_only', 'mean_scale')
NONLINEARITIES = ('gelu', 'softplus', 'leaky_relu', 'relu')
GATE_SURROGATES = ('soft', 'straight_through')
LAMBDA_TRANSFORMS = ('raw', 'log')
STAGES = ('fixed_rate', 'ecg', 'bm_finetune', 'joint')
OPTIMIZERS = ('adam', 'sgd')


def default_lambda_set(count: int = 8, low: float = 1e-3, high: float = 2e-1) -> List[float]:
    """Log-spaced trade-off grid used when no Λ is configured."""
    if count == 1:
        return [high]
    step = (math.log(high) - math.log(low)) / (count - 1)
    return [float(math.exp(math.log(low) + i * step)) for i in range(count)]


@dataclass
class LoggingConfig:
    """Logging configuration settings."""

    level: str = "INFO"
    file: str = "logs/gcodec.log"
    max_file_size: int = 10485760  # 10MB
    backup_count: int = 5

    def __post_init__(self):
        """Validate configuration after initialization."""
        allowed_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if self.level.upper() not in allowed_levels:
            raise InvalidArgumentError(f'Log level must be one of: {", ".join(allowed_levels)}')
        self.level = self.level.upper()

        if self.max_file_size <= 0:
            raise InvalidArgumentError('Max file size must be positive')

        if self.backup_count < 0:
            raise InvalidArgumentError('Backup count must be non-negative')


@dataclass
class CodecConfig:
    """Architecture of the gated hyperprior codec."""

    image_channels: int = 3
    base_channels: int = 32
    latent_channels: int = 48
    entropy_mode: str = "scale_only"
    nonlinearity: str = "gelu"
    gate_every_layer_except_first: bool = True
    gate_epsilon: float = 4.0
    gate_surrogate: str = "soft"
    use_modulator: bool = True
    modulator_hidden: int = 64
    lambda_transform: str = "log"
    tied_reciprocal: bool = False
    scale_floor: float = 0.11
    likelihood_floor: float = 1e-9
    prior_init_scale: float = 2.0

    def __post_init__(self):
        """Validate configuration after initialization."""
        for attr_name in ['image_channels', 'base_channels', 'latent_channels', 'modulator_hidden']:
            if getattr(self, attr_name) < 1:
                raise InvalidArgumentError(f'{attr_name} must be positive')

        if self.entropy_mode not in ENTROPY_MODES:
            raise InvalidArgumentError(f'Entropy mode must be one of: {", ".join(ENTROPY_MODES)}')
        if self.nonlinearity not in NONLINEARITIES:
            raise InvalidArgumentError(f'Nonlinearity must be one of: {", ".join(NONLINEARITIES)}')
        if self.gate_surrogate not in GATE_SURROGATES:
            raise InvalidArgumentError(f'Gate surrogate must be one of: {", ".join(GATE_SURROGATES)}')
        if self.lambda_transform not in LAMBDA_TRANSFORMS:
            raise InvalidArgumentError(f'Lambda transform must be one of: {", ".join(LAMBDA_TRANSFORMS)}')

        if self.gate_epsilon <= 0:
            raise InvalidArgumentError('Gate epsilon must be positive')
        if self.scale_floor <= 0 or not 0 < self.likelihood_floor < 1:
            raise InvalidArgumentError('Scale floor must be positive and likelihood floor in (0, 1)')
        if self.prior_init_scale <= 0:
            raise InvalidArgumentError('Prior init scale must be positive')


@dataclass
class TrainConfig:
    """Training objective and optimization settings."""

    lambda_set: List[float] = field(default_factory=default_lambda_set)
    gamma: float = 1e-4
    alpha_target: float = 1e-4
    steps: int = 2000
    batch_size: int = 8
    learning_rate: float = 1e-4
    seed: int = 0
    stage: str = "joint"
    freeze_backbone: bool = False
    distortion_scale: float = 65025.0  # 255 ** 2
    optimizer: str = "adam"
    grad_clip: float = 1.0
    log_interval: int = 10
    checkpoint_interval: int = 500
    penalty_only: bool = False
    num_workers: int = 0

    def __post_init__(self):
        """Validate configuration after initialization."""
        if not self.lambda_set:
            raise InvalidArgumentError('Lambda set must not be empty')
        self.lambda_set = [float(lam) for lam in self.lambda_set]
        if any(lam <= 0 for lam in self.lambda_set):
            raise InvalidArgumentError('Lambda values must be positive')

        if self.stage not in STAGES:
            raise InvalidArgumentError(f'Stage must be one of: {", ".join(STAGES)}')
        if self.stage == 'fixed_rate' and len(self.lambda_set) != 1:
            raise InvalidArgumentError('fixed_rate stage uses exactly one lambda')
        if self.freeze_backbone and self.stage != 'bm_finetune':
            raise InvalidArgumentError('freeze_backbone applies to the bm_finetune stage only')

        if self.gamma < 0:
            raise InvalidArgumentError('Gamma must be non-negative')
        if self.optimizer not in OPTIMIZERS:
            raise InvalidArgumentError(f'Optimizer must be one of: {", ".join(OPTIMIZERS)}')

        if self.steps < 0:
            raise InvalidArgumentError('Steps must be non-negative')
        for attr_name in ['batch_size', 'log_interval', 'checkpoint_interval']:
            if getattr(self, attr_name) <= 0:
                raise InvalidArgumentError(f'{attr_name} must be positive')
        if self.learning_rate <= 0 or self.distortion_scale <= 0:
            raise InvalidArgumentError('Learning rate and distortion scale must be positive')
        if self.grad_clip < 0 or self.num_workers < 0:
            raise InvalidArgumentError('grad_clip and num_workers must be non-negative')


@dataclass
class EvalConfig:
    """Evaluation settings."""

    lambda_grid: List[float] = field(default_factory=default_lambda_set)
    report_file: str = "reports/rd_report.jsonl"
    csv_file: str = "reports/rd_report.csv"

    def __post_init__(self):
        """Validate configuration after initialization."""
        if not self.lambda_grid:
            raise InvalidArgumentError('Lambda grid must not be empty')
        self.lambda_grid = [float(lam) for lam in self.lambda_grid]
        if any(lam <= 0 for lam in self.lambda_grid):
            raise InvalidArgumentError('Lambda values must be positive')


@dataclass
class DataConfig:
    """Dataset ingestion settings."""

    data_dir: Optional[str] = None
    patch_store: str = "data/patches"
    patch_size: int = 64
    scales: List[int] = field(default_factory=lambda: [1, 2, 4])

    def __post_init__(self):
        """Validate configuration after initialization."""
        if self.patch_size <= 0 or self.patch_size % 16 != 0:
            raise InvalidArgumentError('Patch size must be a positive multiple of 16')
        if not self.scales or any(int(s) < 1 for s in self.scales):
            raise InvalidArgumentError('Scales must be a non-empty list of positive integers')
        self.scales = [int(s) for s in self.scales]


SECTION_TYPES = {
    "logging": LoggingConfig,
    "codec": CodecConfig,
    "train": TrainConfig,
    "eval": EvalConfig,
    "data": DataConfig,
}


def _build_section(section_cls, data: Dict[str, Any], section: str):
    """Build one config section, rejecting keys the dataclass does not declare."""
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"Config section '{section}' must be an object")
    known = {f.name for f in fields(section_cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InvalidArgumentError(f"Unknown keys in config section '{section}': {', '.join(unknown)}")
    return section_cls(**data)


@dataclass
class Config:
    """Main configuration class with file management."""

    logging: LoggingConfig = field(default_factory=LoggingConfig)
    codec: CodecConfig = field(default_factory=CodecConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    data: DataConfig = field(default_factory=DataConfig)
    config_file: Optional[str] = "config.json"

    @classmethod
    def from_dict(cls, config_data: Dict[str, Any], config_file: Optional[str] = None) -> 'Config':
        """
        Build a configuration from a nested dictionary.

        Args:
            config_data: Mapping of section name to section fields
            config_file: Path the data was read from, if any

        Returns:
            Config instance

        Raises:
            InvalidArgumentError: On unknown sections/keys or invalid values
        """
        unknown = sorted(set(config_data) - set(SECTION_TYPES))
        if unknown:
            raise InvalidArgumentError(f"Unknown config sections: {', '.join(unknown)}")

        sections = {
            name: _build_section(section_cls, config_data.get(name, {}), name)
            for name, section_cls in SECTION_TYPES.items()
        }
        return cls(config_file=config_file, **sections)

    @classmethod
    def load(cls, config_path: Optional[str] = None) -> 'Config':
        """
        Load configuration from JSON file.

        Args:
            config_path: Path to configuration file. If None, uses default.

        Returns:
            Config instance loaded from file, or defaults when the file is absent

        Raises:
            InvalidArgumentError: If config file contains invalid data
        """
        config_file = Path(config_path) if config_path else Path("config.json")

        if not config_file.exists():
            if config_path:
                raise InvalidArgumentError(f"Config file not found: {config_file}")
            return cls(config_file=None)

        try:
            with open(config_file, 'r') as f:
                config_data = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidArgumentError(f"Invalid JSON in config file: {e}")

        return cls.from_dict(config_data, config_file=str(config_file))

    def save(self, config_path: Optional[str] = None) -> None:
        """
        Save configuration to JSON file.

        Args:
            config_path: Path to save config file. If None, uses current config_file.
        """
        save_path = Path(config_path) if config_path else Path(self.config_file or "config.json")
        save_path.parent.mkdir(parents=True, exist_ok=True)

        with open(save_path, 'w') as f:
            json.dump(self.to_dict(), f, indent=2)

    def to_dict(self) -> dict:
        """Convert configuration to dictionary."""
        return {name: asdict(getattr(self, name)) for name in SECTION_TYPES}

    def apply_overrides(self, overrides: List[str]) -> 'Config':
        """
        Apply dotted ``section.key=value`` overrides and re-validate.

        Values are parsed as JSON when possible (numbers, booleans, lists),
        otherwise taken as plain strings.

        Args:
            overrides: Override expressions such as ``train.steps=100``

        Returns:
            A new, validated Config instance
        """
        data = self.to_dict()
        for override in overrides:
            if '=' not in override:
                raise InvalidArgumentError(f"Override must look like section.key=value: {override}")
            key, raw_value = override.split('=', 1)
            parts = key.strip().split('.')
            if len(parts) != 2 or parts[0] not in data:
                raise InvalidArgumentError(f"Unknown config key: {key}")
            section, name = parts
            if name not in data[section]:
                raise InvalidArgumentError(f"Unknown config key: {key}")
            try:
                value = json.loads(raw_value)
            except json.JSONDecodeError:
                value = raw_value
            data[section][name] = value
        return Config.from_dict(data, config_file=self.config_file)


def config_from_dict(section_cls, data: Dict[str, Any]):
    """Rebuild a single dataclass section (used when restoring checkpoints)."""
    return _build_section(section_cls, dict(data), section_cls.__name__)


def section_to_dict(section) -> Dict[str, Any]:
    """Serialize a dataclass config section."""
    if not is_dataclass(section):
        raise InvalidArgumentError(f"Not a config section: {type(section).__name__}")
    return asdict(section)
