"""
Main entry point for the gcodec application.

This module provides the main CLI interface and command routing.
"""

import sys

import click
from rich.console import Console
from rich.panel import Panel

from . import __version__
from .commands import compress, config_group, decompress, eval_command, ingest, profile, storage, train
from .errors import GcodecError
from .utils import Config, cleanup_logging, setup_logging

console = Console()


@click.group()
@click.version_option(version=__version__, prog_name="gcodec")
@click.option('--config', '-c', help='Configuration file path')
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose output')
@click.pass_context
def cli(ctx, config, verbose):
    """
    gcodec - Gated variable-rate learned image compression.

    Trains, evaluates and runs a hyperprior image codec with energy-based
    channel gating and a single-model bit-rate modulator.
    """
    ctx.ensure_object(dict)

    try:
        ctx.obj['config'] = Config.load(config)
    except GcodecError as e:
        console.print(f"[red]Invalid configuration: {e}[/red]")
        sys.exit(e.exit_code)
    ctx.obj['verbose'] = verbose

    logging_cfg = ctx.obj['config'].logging
    log_level = "DEBUG" if verbose else logging_cfg.level
    setup_logging(log_level, logging_cfg.file, logging_cfg.max_file_size, logging_cfg.backup_count)
    ctx.call_on_close(cleanup_logging)

    if verbose:
        console.print("[dim]Verbose mode enabled[/dim]")


cli.add_command(ingest, name='ingest')
cli.add_command(train, name='train')
cli.add_command(eval_command, name='eval')
cli.add_command(profile, name='profile')
cli.add_command(storage, name='storage')
cli.add_command(compress, name='compress')
cli.add_command(decompress, name='decompress')
cli.add_command(config_group, name='config')


@cli.command()
def info():
    """Display application information."""
    console.print(Panel.fit(
        "[bold blue]gcodec[/bold blue]\n"
        f"Version: {__version__}\n"
        "Description: Gated variable-rate learned image compression\n\n"
        "[bold]Features:[/bold]\n"
        "• Energy-based channel gating with adaptive 1-D kernels\n"
        "• One model for many rates via a bit-rate modulator pair\n"
        "• Scale hyperprior with a range-coded GCV1 bitstream\n"
        "• Per-layer FLOP ledger and storage accounting\n"
        "• Rate-distortion reports as JSON lines and CSV",
        title="Application Information"
    ))


if __name__ == "__main__":
    cli()
