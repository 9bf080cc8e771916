"""
Compression commands for gcodec.

This module contains the compress and decompress commands that turn images
into GCV1 bitstreams and back.
"""

from pathlib import Path
from typing import Optional

import click
from rich.console import Console

from .common import handle_errors
from ..compression import Bitstream, compress_image, decompress_image, load_checkpoint
from ..core.evaluator import lambda_in_range
from ..core.metrics import bits_per_pixel, psnr
from ..errors import DataError
from ..utils import PathValidator
from ..utils.image_io import load_image, save_image

console = Console()


@click.command()
@click.option('--checkpoint', required=True, help='Trained checkpoint')
@click.option('--input', '-i', 'input_path', required=True, help='Image to compress')
@click.option('--lambda', 'lam', type=float, required=True, help='Trade-off factor')
@click.option('--out', '-o', default=None, help='Bitstream file (default: <input>.gcv)')
@handle_errors
def compress(checkpoint: str, input_path: str, lam: float, out: Optional[str]):
    """Compress an image into a bitstream."""
    loaded = load_checkpoint(checkpoint)
    if not lambda_in_range(lam, loaded.lambda_set):
        console.print(f"[yellow]Warning: λ={lam:g} lies outside the trained range; "
                      f"rate control is extrapolated[/yellow]")

    x = load_image(str(PathValidator.validate_file(input_path)))
    bitstream = compress_image(loaded.codec, x, lam)
    out = out or str(Path(input_path).with_suffix('.gcv'))
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_bytes(bitstream.to_bytes())

    height, width = bitstream.image_size
    console.print(f"[green]Bitstream saved to: {out}[/green]")
    console.print(f"{bitstream.size_bytes} bytes, "
                  f"{bits_per_pixel(bitstream.size_bits, width, height):.4f} bpp at λ={lam:g}")


@click.command()
@click.option('--checkpoint', required=True, help='Checkpoint that produced the bitstream')
@click.option('--input', '-i', 'input_path', required=True, help='Bitstream file')
@click.option('--out', '-o', required=True, help='Reconstructed image file')
@click.option('--original', default=None, help='Original image, to report PSNR')
@handle_errors
def decompress(checkpoint: str, input_path: str, out: str, original: Optional[str]):
    """Reconstruct an image from a bitstream."""
    loaded = load_checkpoint(checkpoint)
    data = PathValidator.validate_file(input_path).read_bytes()
    bitstream = Bitstream.from_bytes(data)
    x_hat = decompress_image(loaded.codec, bitstream)
    save_image(x_hat, out)

    height, width = bitstream.image_size
    console.print(f"[green]Image saved to: {out}[/green]")
    console.print(f"{width}x{height}, {bits_per_pixel(bitstream.size_bits, width, height):.4f} bpp")
    if original:
        x = load_image(str(PathValidator.validate_file(original)))
        if tuple(x.shape[-2:]) != (height, width):
            raise DataError(f"Original is {x.shape[-1]}x{x.shape[-2]}, bitstream holds {width}x{height}")
        console.print(f"PSNR: {psnr(x, x_hat.clamp(0.0, 1.0)):.2f} dB")
