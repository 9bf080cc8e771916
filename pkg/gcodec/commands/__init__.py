"""
CLI commands module.

This package contains all CLI commands and their implementations.
"""

from .config_commands import config_group
from .data_commands import ingest
from .train_commands import train
from .eval_commands import eval_command, profile, storage
from .codec_commands import compress, decompress

__all__ = [
    "config_group",
    "ingest",
    "train",
    "eval_command",
    "profile",
    "storage",
    "compress",
    "decompress"
]
