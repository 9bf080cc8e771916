"""
Logging configuration module for gcodec.

This module provides centralized logging configuration with a rich console
handler and a rotating file handler for training and evaluation runs.
"""

import logging
import logging.handlers
import traceback
from pathlib import Path
from typing import Optional
from rich.logging import RichHandler
from rich.console import Console


class GcodecLogger:
    """Centralized logging configuration for gcodec."""

    def __init__(self, log_level: str = "INFO", log_file: Optional[str] = None,
                 max_file_size: int = 10 * 1024 * 1024, backup_count: int = 5):
        """
        Initialize the logger configuration.

        Args:
            log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
            log_file: Path to log file. If None, uses default location
            max_file_size: Maximum size of log file before rotation (bytes)
            backup_count: Number of backup files to keep
        """
        self.log_level = getattr(logging, log_level.upper(), logging.INFO)
        self.log_file = log_file or self._get_default_log_file()
        self.max_file_size = max_file_size
        self.backup_count = backup_count
        self.console = Console(stderr=True)

        self._setup_logging()

    def _get_default_log_file(self) -> str:
        """Get default log file path."""
        return str(Path("logs") / "gcodec.log")

    def _setup_logging(self):
        """Set up logging configuration."""
        self.logger = logging.getLogger("gcodec")
        self.logger.setLevel(logging.DEBUG)

        # Clear existing handlers to prevent duplicates
        for handler in self.logger.handlers[:]:
            handler.close()
            self.logger.removeHandler(handler)

        detailed_formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        console_handler = RichHandler(
            console=self.console,
            show_time=True,
            show_path=False,
            markup=False
        )
        console_handler.setLevel(self.log_level)
        self.logger.addHandler(console_handler)

        log_path = Path(self.log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_path,
            maxBytes=self.max_file_size,
            backupCount=self.backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(logging.DEBUG)  # Always log everything to file
        file_handler.setFormatter(detailed_formatter)
        self.logger.addHandler(file_handler)

        self.logger.propagate = False

    def get_logger(self, name: Optional[str] = None) -> logging.Logger:
        """
        Get a logger instance.

        Args:
            name: Logger name. If None, returns the main logger

        Returns:
            Logger instance
        """
        if name:
            return self.logger.getChild(name)
        return self.logger

    def set_level(self, level: str):
        """
        Set console logging level.

        Args:
            level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        """
        self.log_level = getattr(logging, level.upper(), logging.INFO)
        for handler in self.logger.handlers:
            if isinstance(handler, RichHandler):
                handler.setLevel(self.log_level)

    def get_log_file_path(self) -> str:
        """Get the current log file path."""
        return self.log_file

    def log_run_start(self, command: str, **details):
        """Log the banner of a train/eval/profile run."""
        self.logger.info("=" * 60)
        self.logger.info(f"Starting {command}")
        for key, value in details.items():
            self.logger.info(f"{key}: {value}")
        self.logger.info(f"Log File: {self.log_file}")
        self.logger.info("=" * 60)

    def log_run_end(self, command: str, success: bool, **details):
        """Log the closing banner of a run."""
        self.logger.info("=" * 60)
        self.logger.info(f"{command} completed: {'OK' if success else 'FAILED'}")
        for key, value in details.items():
            self.logger.info(f"{key}: {value}")
        self.logger.info("=" * 60)

    def log_step(self, record):
        """Log one training record; steps without a sparsity measurement go to DEBUG only."""
        message = (f"step {record.step + 1} [{record.stage}] lambda={record.lam:.4g} "
                   f"R={record.rate:.4f} D={record.distortion:.6f} penalty={record.penalty:.3g} "
                   f"total={record.total:.4f}")
        if record.sparsity is None:
            self.logger.debug(message)
        else:
            self.logger.info(f"{message} sparsity={record.sparsity:.3f}")

    def error_with_stacktrace(self, message: str, exception: Exception = None, level: int = logging.ERROR):
        """
        Log error message with full stacktrace.

        Args:
            message: Error message to log
            exception: Optional exception object for additional context
            level: Logging level of the record; DEBUG keeps it out of the console
        """
        if exception:
            error_msg = f"{message}: {str(exception)}"
        else:
            error_msg = message

        stacktrace = traceback.format_exc()
        self.logger.log(level, f"{error_msg}\nStacktrace:\n{stacktrace}")

    def cleanup(self):
        """Clean up logging handlers and close file handles."""
        for handler in self.logger.handlers[:]:
            handler.close()
            self.logger.removeHandler(handler)


# Global logger instance
_logger_instance: Optional[GcodecLogger] = None


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None,
                  max_file_size: int = 10 * 1024 * 1024, backup_count: int = 5) -> GcodecLogger:
    """
    Set up global logging configuration.

    Args:
        log_level: Console logging level
        log_file: Path to log file
        max_file_size: Rotation size in bytes
        backup_count: Number of rotated files kept

    Returns:
        Logger instance
    """
    global _logger_instance

    if _logger_instance is None or (log_file and _logger_instance.log_file != log_file):
        if _logger_instance is not None:
            _logger_instance.cleanup()
        _logger_instance = GcodecLogger(log_level, log_file, max_file_size, backup_count)
    elif _logger_instance.log_level != getattr(logging, log_level.upper(), logging.INFO):
        _logger_instance.set_level(log_level)

    return _logger_instance


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Get a logger instance.

    Loggers are children of the ``gcodec`` logger, so handlers installed
    later by ``setup_logging`` apply to loggers created at import time.

    Args:
        name: Logger name

    Returns:
        Logger instance
    """
    base = logging.getLogger("gcodec")
    return base.getChild(name) if name else base


def get_log_file_path() -> str:
    """Get the current log file path."""
    if _logger_instance is None:
        setup_logging()

    return _logger_instance.get_log_file_path()


def error_with_stacktrace(message: str, exception: Exception = None, level: int = logging.ERROR):
    """
    Log error message with full stacktrace using the global logger.

    Args:
        message: Error message to log
        exception: Optional exception object for additional context
        level: Logging level of the record
    """
    if _logger_instance is None:
        setup_logging()

    _logger_instance.error_with_stacktrace(message, exception, level)


def get_run_logger() -> GcodecLogger:
    """Return the global logger wrapper, creating it with defaults if needed."""
    if _logger_instance is None:
        setup_logging()
    return _logger_instance


def cleanup_logging():
    """Clean up the global logger instance."""
    global _logger_instance
    if _logger_instance is not None:
        _logger_instance.cleanup()
        _logger_instance = None
