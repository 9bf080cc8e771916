"""
Evaluation commands for gcodec.

This module contains the rate-distortion sweep, the FLOP profiler and the
storage comparison.
"""

from typing import Optional, Tuple

import click

from .common import context_config, handle_errors, parse_lambda_list, resolve_config, set_option
from ..compression import load_checkpoint, parameter_bytes
from ..core.dataset import resolve_data_dir
from ..core.evaluator import (
    attach_psnr_drop, default_profile_lambda, evaluate, lambda_in_range, profile as run_profile,
)
from ..core.metrics import storage_report
from ..core.result_handler import ResultHandler
from ..utils import get_run_logger


@click.command(name='eval')
@click.option('--checkpoint', required=True, help='Trained checkpoint')
@click.option('--images', '-i', default=None, help='Image directory (default: $GCODEC_DATA_DIR)')
@click.option('--lambda-grid', default=None, help='Comma-separated λ values (default: eval.lambda_grid)')
@click.option('--out', '-o', default=None, help='JSON-lines report file (default: eval.report_file)')
@click.option('--csv', 'csv_file', default=None, help='CSV table file (default: eval.csv_file)')
@click.option('--actual', is_flag=True, help='Also range-code every image and report the coded bpp')
@click.option('--baseline', default=None, help='Reference checkpoint; reports the PSNR drop against it')
@click.option('--progress/--no-progress', default=True, help='Show a progress bar')
@set_option
@click.pass_context
@handle_errors
def eval_command(ctx, checkpoint: str, images: Optional[str], lambda_grid: Optional[str], out: Optional[str],
                 csv_file: Optional[str], actual: bool, baseline: Optional[str], progress: bool,
                 overrides: Tuple[str, ...]):
    """Rate-distortion sweep over an image directory."""
    config = resolve_config(
        context_config(ctx), overrides,
        eval__lambda_grid=parse_lambda_list(lambda_grid), eval__report_file=out, eval__csv_file=csv_file,
    )
    loaded = load_checkpoint(checkpoint)
    reference = load_checkpoint(baseline) if baseline else None
    image_dir = resolve_data_dir(images)
    for lam in config.eval.lambda_grid:
        lambda_in_range(lam, loaded.lambda_set)

    run_logger = get_run_logger()
    run_logger.log_run_start("eval", checkpoint=checkpoint, images=image_dir,
                             lambdas=len(config.eval.lambda_grid), actual=actual, baseline=baseline)
    report = evaluate(loaded.codec, image_dir, config.eval.lambda_grid, actual=actual,
                      checkpoint=checkpoint, show_progress=progress)
    if reference is not None:
        baseline_report = evaluate(reference.codec, image_dir, config.eval.lambda_grid, show_progress=progress)
        attach_psnr_drop(report, baseline_report, baseline)
    run_logger.log_run_end("eval", True, rows=len(report.results))

    handler = ResultHandler()
    handler.print_summary(report)
    handler.save_report(report, config.eval.report_file, config.eval.csv_file)


@click.command()
@click.option('--checkpoint', required=True, help='Trained checkpoint')
@click.option('--images', '-i', default=None, help='Image directory (default: $GCODEC_DATA_DIR)')
@click.option('--lambda', 'lam', type=float, default=None, help='Trade-off factor (default: median of trained Λ)')
@click.option('--csv', 'csv_file', default=None, help='Write the per-layer ledger as CSV')
@click.pass_context
@handle_errors
def profile(ctx, checkpoint: str, images: Optional[str], lam: Optional[float], csv_file: Optional[str]):
    """Per-layer FLOP ledger with reduction ratio and sparsity."""
    config = context_config(ctx)
    loaded = load_checkpoint(checkpoint)
    if lam is None:
        lam = default_profile_lambda(loaded.lambda_set or config.eval.lambda_grid)
    lambda_in_range(lam, loaded.lambda_set)

    result = run_profile(loaded.codec, resolve_data_dir(images), lam)
    handler = ResultHandler()
    handler.print_ledger(result)
    if csv_file:
        handler.save_ledger(result, csv_file)


@click.command()
@click.option('--checkpoint', required=True, help='Variable-rate checkpoint')
@click.option('--fixed', multiple=True, help='Fixed-rate checkpoint to compare against (repeatable)')
@handle_errors
def storage(checkpoint: str, fixed: Tuple[str, ...]):
    """
    Parameter storage of one variable-rate model versus fixed-rate models.

    Without --fixed, one modulator-free copy per trained λ stands in for the
    fixed-rate set.
    """
    loaded = load_checkpoint(checkpoint)
    if fixed:
        per_model = [parameter_bytes(load_checkpoint(path).codec) for path in fixed]
    else:
        state = loaded.codec.state_dict()
        backbone = {k: v for k, v in state.items() if not k.startswith("modulator.")}
        per_model = [parameter_bytes(backbone)] * max(1, len(loaded.lambda_set))
    ResultHandler().print_storage(storage_report(per_model, loaded.codec))
