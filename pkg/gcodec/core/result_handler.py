"""
Result handling module for rate-distortion reports, FLOP ledgers and storage accounting.

This module renders results as rich tables and saves them to files.
"""

import logging
from typing import Optional

from rich.console import Console
from rich.table import Table

from .evaluator import ProfileResult
from .metrics import StorageReport
from ..errors import DataError
from ..models.report_models import RDReport
from ..utils.logging_config import error_with_stacktrace

console = Console()


class ResultHandler:
    """Handles report rendering and persistence."""

    def save_report(self, report: RDReport, report_file: str, csv_file: Optional[str] = None) -> None:
        """
        Save an R-D report as JSON lines and, optionally, CSV.

        Args:
            report: Report to save
            report_file: JSON-lines output path
            csv_file: CSV output path

        Raises:
            DataError: If a file cannot be written
        """
        try:
            report.save(report_file, csv_file)
        except OSError as e:
            error_with_stacktrace("Failed to save report", e, level=logging.DEBUG)
            raise DataError(f"Failed to save report to {report_file}: {e}") from e
        console.print(f"[green]Report saved to: {report_file}[/green]")
        if csv_file:
            console.print(f"[green]CSV saved to: {csv_file}[/green]")

    def save_ledger(self, result: ProfileResult, csv_file: str) -> None:
        """
        Save the per-layer FLOP ledger as CSV.

        Raises:
            DataError: If the file cannot be written
        """
        try:
            result.ledger.save_csv(csv_file)
        except OSError as e:
            error_with_stacktrace("Failed to save ledger", e, level=logging.DEBUG)
            raise DataError(f"Failed to save ledger to {csv_file}: {e}") from e
        console.print(f"[green]Ledger saved to: {csv_file}[/green]")

    def print_summary(self, report: RDReport):
        """
        Print per-λ means of an R-D report.

        Args:
            report: Report to summarize
        """
        aggregates = report.aggregates()
        with_actual = any("bpp_actual" in entry for entry in aggregates)
        with_drop = any("psnr_drop_db" in entry for entry in aggregates)

        table = Table(title="Rate-Distortion Summary")
        table.add_column("λ", style="cyan", justify="right")
        table.add_column("Images", justify="right")
        table.add_column("bpp", style="green", justify="right")
        if with_actual:
            table.add_column("bpp (coded)", style="green", justify="right")
        table.add_column("PSNR [dB]", style="green", justify="right")
        if with_drop:
            table.add_column("PSNR drop [dB]", justify="right")
            table.add_column("PSNR drop [%]", justify="right")
        table.add_column("Sparsity", justify="right")

        for entry in aggregates:
            row = [f"{entry['lam']:.4g}", str(entry["images"]), f"{entry['bpp']:.4f}"]
            if with_actual:
                row.append(f"{entry['bpp_actual']:.4f}" if "bpp_actual" in entry else "-")
            row.append(f"{entry['psnr']:.2f}")
            if with_drop and "psnr_drop_db" in entry:
                row += [f"{entry['psnr_drop_db']:.3f}", f"{entry['psnr_drop_pct']:.2f}"]
            elif with_drop:
                row += ["-", "-"]
            row.append(f"{entry['sparsity']:.1%}")
            table.add_row(*row)
        console.print(table)

        if report.flop_reduction is not None:
            console.print(f"FLOP reduction: [bold]{report.flop_reduction:.2f}x[/bold]")
        if report.model_storage_bytes is not None:
            console.print(f"Model storage: {report.model_storage_bytes / (1024 * 1024):.2f} MB "
                          f"({report.model_storage_bytes} bytes)")

    def print_ledger(self, result: ProfileResult):
        """
        Print the per-layer FLOP ledger, gated and ungated layers labelled.

        Args:
            result: Profiling result
        """
        table = Table(title=f"FLOP Ledger ({result.images} images, λ={result.lam:.4g})")
        table.add_column("Layer", style="cyan")
        table.add_column("Gated")
        table.add_column("Cin", justify="right")
        table.add_column("Active Cin", justify="right")
        table.add_column("Baseline MFLOPs", justify="right")
        table.add_column("Effective MFLOPs", justify="right")
        table.add_column("Reduction", justify="right", style="green")

        for entry in result.ledger.entries:
            reduction = entry.baseline_flops / entry.effective_flops if entry.effective_flops > 0 else float("inf")
            table.add_row(
                entry.layer_id,
                "[yellow]gated[/yellow]" if entry.gated else "[dim]ungated[/dim]",
                str(entry.input_channels),
                f"{entry.input_channels_active:.1f}",
                f"{entry.baseline_flops / 1e6:.2f}",
                f"{entry.effective_flops / 1e6:.2f}",
                f"{reduction:.2f}x",
            )
        console.print(table)

        ledger = result.ledger
        console.print(f"Total: {ledger.baseline_total / 1e6:.2f} → {ledger.effective_total / 1e6:.2f} MFLOPs "
                      f"([bold]{result.reduction:.2f}x[/bold]), FLOP-weighted sparsity {result.sparsity:.1%}")
        console.print(f"[dim]Module overhead (gates, modulators): "
                      f"{ledger.module_overhead_flops / 1e6:.3f} MFLOPs[/dim]")

    def print_storage(self, storage: StorageReport):
        """Print fixed-rate versus variable-rate parameter storage."""
        table = Table(title="Model Storage")
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="green")
        table.add_row("Fixed-rate models", str(len(storage.per_model_bytes)))
        table.add_row("Fixed-rate total", f"{storage.fixed_rate_total_bytes / (1024 * 1024):.2f} MB")
        table.add_row("Variable-rate model", f"{storage.variable_rate_megabytes:.2f} MB")
        table.add_row("Saving", f"{storage.saving:.1%}")
        console.print(table)
