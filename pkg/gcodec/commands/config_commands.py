"""
Configuration management commands for gcodec.

This module contains commands for managing configuration files.
"""

from pathlib import Path

import click
from rich.console import Console
from rich.table import Table

from .common import handle_errors
from ..utils import Config

console = Console()


@click.group()
def config_group():
    """Configuration management commands."""
    pass


@config_group.command()
@click.option('--config', '-c', help='Configuration file path')
@handle_errors
def show(config: str):
    """Display current configuration."""
    config_obj = Config.load(config)

    table = Table(title="Current Configuration")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")

    table.add_row("Config File", config_obj.config_file or "(defaults)")
    for section, values in config_obj.to_dict().items():
        for key, value in values.items():
            if isinstance(value, list):
                value = ", ".join(f"{v:.4g}" if isinstance(v, float) else str(v) for v in value)
            table.add_row(f"{section}.{key}", str(value))

    console.print(table)


@config_group.command()
@click.option('--config', '-c', default='config.json', help='Configuration file path')
@click.option('--force', '-f', is_flag=True, help='Overwrite an existing file without confirmation')
def init(config: str, force: bool):
    """Write a configuration file with default values."""
    if Path(config).exists() and not force:
        if not click.confirm(f"{config} exists. Overwrite it with default values?"):
            console.print("[yellow]Configuration init cancelled[/yellow]")
            return

    Config(config_file=config).save(config)
    console.print(f"[green]Default configuration written to: {config}[/green]")


@config_group.command()
@click.option('--config', '-c', help='Configuration file path')
@handle_errors
def validate(config: str):
    """Load a configuration file and report whether it is valid."""
    config_obj = Config.load(config)
    console.print(f"[green]Configuration is valid[/green] ({config_obj.config_file or 'defaults'})")
    console.print(f"Stage: {config_obj.train.stage}, |Λ| = {len(config_obj.train.lambda_set)}, "
                  f"N={config_obj.codec.base_channels}, M={config_obj.codec.latent_channels}")
