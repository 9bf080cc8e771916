"""
Dataset commands for gcodec.
"""

from typing import Optional

import click
from rich.console import Console
from rich.table import Table

from .common import context_config, handle_errors
from ..core.dataset import ingest_dataset, resolve_data_dir

console = Console()


@click.command()
@click.option('--src', '-s', default=None, help='Source image directory (default: data.data_dir or $GCODEC_DATA_DIR)')
@click.option('--out', '-o', default=None, help='Patch store directory (default: data.patch_store)')
@click.option('--patch', type=int, default=None, help='Patch side in pixels (default: data.patch_size)')
@click.option('--scales', default=None, help='Comma-separated downsampling factors (default: data.scales)')
@click.pass_context
@handle_errors
def ingest(ctx, src: Optional[str], out: Optional[str], patch: Optional[int], scales: Optional[str]):
    """Tile a directory of images into a training patch store."""
    config = context_config(ctx).data
    source = resolve_data_dir(src or config.data_dir)
    scale_list = [int(s) for s in scales.split(',')] if scales else config.scales
    manifest = ingest_dataset(source, out or config.patch_store, patch or config.patch_size, scale_list)

    table = Table(title="Patch Store")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Source", source)
    table.add_row("Images", str(len(manifest.sources)))
    table.add_row("Skipped", str(len(manifest.skipped)))
    table.add_row("Patch size", str(manifest.patch_size))
    table.add_row("Scales", ", ".join(str(s) for s in manifest.scales))
    table.add_row("Patches", str(manifest.count))
    console.print(table)
