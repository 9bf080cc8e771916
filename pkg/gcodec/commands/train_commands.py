"""
Training command for gcodec.

This module contains the command that trains a codec from a patch store.
"""

from pathlib import Path
from typing import Optional, Tuple

import click
from rich.console import Console
from rich.panel import Panel

from .common import context_config, handle_errors, parse_lambda_list, resolve_config, set_option
from ..compression import build_codec, load_checkpoint
from ..core.dataset import PatchDataset
from ..core.trainer import train as run_training
from ..errors import InvalidStateError
from ..models.config_models import STAGES
from ..utils import get_run_logger

console = Console()


@click.command()
@click.option('--data', '-d', default=None, help='Patch store directory (default: data.patch_store)')
@click.option('--checkpoint', default=None, help='Checkpoint to continue from')
@click.option('--out', '-o', default='checkpoints', show_default=True, help='Checkpoint output directory')
@click.option('--stage', type=click.Choice(STAGES), default=None, help='Training stage')
@click.option('--steps', type=int, default=None, help='Number of optimization steps')
@click.option('--seed', type=int, default=None, help='Seed for initialization, batching and noise')
@click.option('--lambda', 'lambdas', default=None, help='Comma-separated trade-off set Λ')
@click.option('--metrics-log', default=None, help='JSON-lines metrics file (default: <out>/metrics.jsonl)')
@click.option('--progress/--no-progress', default=True, help='Show a progress bar')
@set_option
@click.pass_context
@handle_errors
def train(ctx, data: Optional[str], checkpoint: Optional[str], out: str, stage: Optional[str],
          steps: Optional[int], seed: Optional[int], lambdas: Optional[str], metrics_log: Optional[str],
          progress: bool, overrides: Tuple[str, ...]):
    """Train a codec (fixed_rate, ecg, bm_finetune or joint stage)."""
    config = resolve_config(
        context_config(ctx), overrides,
        train__stage=stage, train__steps=steps, train__seed=seed,
        train__lambda_set=parse_lambda_list(lambdas),
    )
    cfg = config.train
    if cfg.stage == 'bm_finetune' and checkpoint is None:
        raise InvalidStateError("bm_finetune fine-tunes a pretrained model; pass --checkpoint")

    if checkpoint:
        loaded = load_checkpoint(checkpoint)
        codec = loaded.codec
        if loaded.codec.cfg != config.codec:
            console.print("[yellow]Using the codec architecture stored in the checkpoint[/yellow]")
    else:
        codec = build_codec(config.codec, seed=cfg.seed)

    store = data or config.data.patch_store
    dataset = PatchDataset.from_store(store)
    metrics_log = metrics_log or str(Path(out) / "metrics.jsonl")

    console.print(Panel.fit(
        "[bold blue]gcodec training[/bold blue]\n"
        f"Stage: {cfg.stage}\n"
        f"Patches: {len(dataset)} from {store}\n"
        f"Steps: {cfg.steps}  Batch: {cfg.batch_size}  Seed: {cfg.seed}\n"
        f"Λ: {', '.join(f'{lam:.4g}' for lam in cfg.lambda_set)}\n"
        f"γ: {cfg.gamma}  α_t: {cfg.alpha_target}\n"
        f"Output: {out}",
        title="Configuration"
    ))

    run_logger = get_run_logger()
    run_logger.log_run_start("train", stage=cfg.stage, steps=cfg.steps, checkpoint=checkpoint or "-", out=out)
    result = run_training(codec, dataset, cfg, checkpoint_dir=out, metrics_log=metrics_log,
                          show_progress=progress, on_record=run_logger.log_step)
    run_logger.log_run_end("train", True, steps=result.steps_completed, checkpoint=result.checkpoint_path)

    console.print(f"[green]Checkpoint saved to: {result.checkpoint_path}[/green]")
    console.print(f"[green]Metrics log: {metrics_log}[/green]")
