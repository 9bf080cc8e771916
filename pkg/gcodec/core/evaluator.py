"""
Rate-distortion evaluation and FLOP profiling of trained codecs.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import torch
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn

from .flops import effective_flops, flop_reduction, flop_weighted_sparsity, merge_ledgers, module_overhead
from .metrics import bits_per_pixel, psnr, psnr_drop
from ..compression.bitstream import compress_image
from ..compression.checkpoint import parameter_bytes
from ..compression.codec import DOWNSAMPLING, ForwardResult, GatedHyperpriorCodec
from ..compression.modes import Mode
from ..errors import DataError
from ..models.report_models import FlopLedger, ImageResult, RDReport
from ..utils.image_io import crop, list_images, load_image, pad_to_multiple
from ..utils.logging_config import get_logger
from ..utils.validators import validate_lambdas

logger = get_logger("evaluator")
console = Console(stderr=True)

ImageSource = Union[str, Path, Tuple[str, torch.Tensor]]


def resolve_images(source: Union[str, Sequence[ImageSource]]) -> List[Tuple[str, torch.Tensor]]:
    """
    Named images from a directory, a list of paths or (name, tensor) pairs.

    Raises:
        DataError: If nothing could be loaded
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        entries: Sequence[ImageSource] = list_images(str(path)) if path.is_dir() else [path]
    else:
        entries = source
    images = []
    for entry in entries:
        if isinstance(entry, tuple):
            images.append((entry[0], entry[1]))
        else:
            images.append((Path(entry).name, load_image(str(entry))))
    if not images:
        raise DataError(f"No images found in {source}")
    return images


def lambda_in_range(lam: float, lambda_set: Sequence[float]) -> bool:
    """Whether ``lam`` lies inside the trained range; logs a warning when it does not."""
    if not lambda_set:
        return True
    low, high = min(lambda_set), max(lambda_set)
    if low <= lam <= high:
        return True
    logger.warning(f"lambda={lam:g} is outside the trained range [{low:g}, {high:g}]; "
                   f"rate control is extrapolated")
    return False


def default_profile_lambda(lambda_set: Sequence[float]) -> float:
    """Median of the trained λ set (upper median for even sizes)."""
    ordered = sorted(lambda_set)
    return ordered[len(ordered) // 2]


@torch.no_grad()
def evaluate_image(codec: GatedHyperpriorCodec, x: torch.Tensor, lam: float) -> Tuple[ForwardResult, torch.Tensor]:
    """
    Eval-mode pass over one image of any size.

    The image is reflect-padded to a multiple of 16 and the reconstruction
    is cropped back and clamped to [0, 1].
    """
    codec.eval()
    x_padded, size = pad_to_multiple(x, DOWNSAMPLING)
    fr = codec(x_padded, lam, Mode.EVAL)
    return fr, crop(fr.x_hat, size).clamp(0.0, 1.0)


def evaluate(codec: GatedHyperpriorCodec, images: Union[str, Sequence[ImageSource]], lambdas: Sequence[float],
             actual: bool = False, checkpoint: Optional[str] = None, show_progress: bool = False) -> RDReport:
    """
    Rate-distortion sweep of one codec.

    Rates are reported per original pixel; padding pixels never count.

    Args:
        codec: Codec to evaluate
        images: Image directory, image paths or (name, tensor) pairs
        lambdas: Trade-off factors to sweep
        actual: Also run the range coder and record the real container size
        checkpoint: Checkpoint path recorded in the report header
        show_progress: Render a rich progress bar

    Returns:
        RDReport with one result per (image, λ)
    """
    validate_lambdas(lambdas)
    loaded = resolve_images(images)
    report = RDReport(model_storage_bytes=parameter_bytes(codec), checkpoint=checkpoint)
    ledgers: List[FlopLedger] = []

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        console=console,
        disable=not show_progress,
    ) as progress:
        task = progress.add_task("Evaluating", total=len(loaded) * len(lambdas))
        for name, x in loaded:
            height, width = x.shape[-2:]
            for lam in lambdas:
                fr, x_hat = evaluate_image(codec, x, float(lam))
                ledger = effective_flops(fr.traces)
                ledgers.append(ledger)
                result = ImageResult(
                    image=name,
                    lam=float(lam),
                    bpp=bits_per_pixel(float(fr.total_rate_bits), width, height),
                    psnr=psnr(x, x_hat),
                    sparsity=flop_weighted_sparsity(ledger),
                )
                if actual:
                    bitstream = compress_image(codec, x, float(lam))
                    result.bpp_actual = bits_per_pixel(bitstream.size_bits, width, height)
                report.results.append(result)
                logger.debug(f"{name} lambda={lam:g}: bpp={result.bpp:.4f} psnr={result.psnr:.2f} "
                             f"sparsity={result.sparsity:.3f}")
                progress.advance(task)

    merged = merge_ledgers(ledgers)
    report.flop_reduction = flop_reduction(merged.baseline_total, merged.effective_total)
    if len(report.lambdas()) > 1 and not monotone_in_lambda(report):
        logger.warning("Mean bpp is not monotone in lambda")
    logger.info(f"Evaluated {len(loaded)} images at {len(lambdas)} lambdas "
                f"(FLOP reduction {report.flop_reduction:.2f}x)")
    return report


@dataclass
class ProfileResult:
    """Merged FLOP ledger of a profiling run."""

    ledger: FlopLedger
    reduction: float
    sparsity: float
    images: int
    lam: float


@torch.no_grad()
def profile(codec: GatedHyperpriorCodec, images: Union[str, Sequence[ImageSource]], lam: float) -> ProfileResult:
    """
    Per-layer baseline and effective FLOPs summed over a set of images.

    Args:
        codec: Codec to profile
        images: Image directory, image paths or (name, tensor) pairs
        lam: Trade-off factor of the profiled passes

    Returns:
        ProfileResult with the merged ledger, reduction ratio and sparsity
    """
    validate_lambdas([lam])
    loaded = resolve_images(images)
    ledgers = []
    for _, x in loaded:
        fr, _ = evaluate_image(codec, x, float(lam))
        ledgers.append(effective_flops(fr.traces, module_overhead(fr.traces, codec)))
    merged = merge_ledgers(ledgers)
    return ProfileResult(
        ledger=merged,
        reduction=flop_reduction(merged.baseline_total, merged.effective_total),
        sparsity=flop_weighted_sparsity(merged),
        images=len(loaded),
        lam=float(lam),
    )


def monotone_in_lambda(report: RDReport, metric: str = "bpp") -> bool:
    """Whether the per-λ mean of ``metric`` is non-decreasing in λ."""
    values = [entry[metric] for entry in report.aggregates()]
    return all(b >= a for a, b in zip(values, values[1:]))


def attach_psnr_drop(report: RDReport, baseline: RDReport, baseline_checkpoint: Optional[str] = None) -> int:
    """
    Fill in each result's PSNR drop against the baseline result for the
    same image and λ, in dB and as percent of the baseline dB.

    Returns:
        Number of results that had a baseline counterpart
    """
    reference = {(r.image, r.lam): r.psnr for r in baseline.results}
    matched = 0
    for result in report.results:
        baseline_db = reference.get((result.image, result.lam))
        if baseline_db is None:
            continue
        result.psnr_drop_db, result.psnr_drop_pct = psnr_drop(baseline_db, result.psnr)
        matched += 1
    report.baseline = baseline_checkpoint
    if matched < len(report.results):
        logger.warning(f"{len(report.results) - matched} results have no baseline counterpart")
    return matched


def images_between_neighbours(grid_report: RDReport, off_grid_report: RDReport) -> float:
    """
    Fraction of (image, off-grid λ) results whose bpp lies between the
    image's results at the neighbouring grid λ values.
    """
    grid = sorted(grid_report.lambdas())
    by_key = {(r.image, r.lam): r.bpp for r in grid_report.results}
    hits, total = 0, 0
    for result in off_grid_report.results:
        below = [lam for lam in grid if lam < result.lam]
        above = [lam for lam in grid if lam > result.lam]
        if not below or not above:
            continue
        low = by_key.get((result.image, below[-1]))
        high = by_key.get((result.image, above[0]))
        if low is None or high is None:
            continue
        total += 1
        hits += int(min(low, high) <= result.bpp <= max(low, high))
    return hits / total if total else 0.0
