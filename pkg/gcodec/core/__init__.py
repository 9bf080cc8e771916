"""
Core modules for gcodec.

This package contains training, evaluation, FLOP and storage accounting,
dataset ingestion and result handling.
"""

from .trainer import TrainResult, rd_loss, sample_lambda, sparsity_loss, total_loss, train
from .evaluator import ProfileResult, evaluate, profile
from .flops import conv_flops, effective_flops, flop_reduction, flop_weighted_sparsity
from .metrics import StorageReport, bits_per_pixel, psnr, psnr_drop, storage_report
from .dataset import PatchDataset, ingest_dataset
from .result_handler import ResultHandler

__all__ = [
    "TrainResult",
    "rd_loss",
    "sample_lambda",
    "sparsity_loss",
    "total_loss",
    "train",
    "ProfileResult",
    "evaluate",
    "profile",
    "conv_flops",
    "effective_flops",
    "flop_reduction",
    "flop_weighted_sparsity",
    "StorageReport",
    "bits_per_pixel",
    "psnr",
    "psnr_drop",
    "storage_report",
    "PatchDataset",
    "ingest_dataset",
    "ResultHandler"
]
