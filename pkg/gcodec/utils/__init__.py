"""
Utility modules for gcodec.

This package contains configuration access, logging configuration,
validators and image I/O helpers used throughout the application.
"""

from .config import Config, LoggingConfig
from .validators import PathValidator, TensorValidator
from .logging_config import (
    setup_logging,
    get_logger,
    get_log_file_path,
    get_run_logger,
    error_with_stacktrace,
    cleanup_logging
)

__all__ = [
    "Config",
    "LoggingConfig",
    "PathValidator",
    "TensorValidator",
    "setup_logging",
    "get_logger",
    "get_log_file_path",
    "get_run_logger",
    "error_with_stacktrace",
    "cleanup_logging"
]
