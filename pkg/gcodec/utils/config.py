"""
Configuration access for command modules.

Commands import the configuration classes from here; the definitions live in
gcodec.models.config_models.
"""

from ..models.config_models import Config, LoggingConfig, CodecConfig, TrainConfig, EvalConfig, DataConfig

__all__ = ["Config", "LoggingConfig", "CodecConfig", "TrainConfig", "EvalConfig", "DataConfig"]
