"""
Models package for gcodec.

This package contains the dataclass models for configuration and for the
records produced by training, profiling and evaluation.
"""

from .config_models import (
    LoggingConfig,
    CodecConfig,
    TrainConfig,
    EvalConfig,
    DataConfig,
    Config,
    default_lambda_set
)
from .report_models import (
    LossBreakdown,
    TrainRecord,
    FlopLedgerEntry,
    FlopLedger,
    ImageResult,
    RDReport
)

__all__ = [
    "LoggingConfig",
    "CodecConfig",
    "TrainConfig",
    "EvalConfig",
    "DataConfig",
    "Config",
    "default_lambda_set",
    "LossBreakdown",
    "TrainRecord",
    "FlopLedgerEntry",
    "FlopLedger",
    "ImageResult",
    "RDReport"
]
