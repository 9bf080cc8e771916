"""
Record models for training logs, FLOP ledgers and rate-distortion reports.

These are plain dataclasses with JSON/CSV helpers; floats are written with
``repr`` precision so every record parses back to the same value.
"""

import csv
import json
from dataclasses import dataclass, field, asdict, fields
from pathlib import Path
from typing import List, Dict, Any, Optional

from ..errors import InvalidArgumentError


@dataclass
class LossBreakdown:
    """Components of one evaluation of the training objective."""

    rate: float
    distortion: float
    sparsity_penalty: float
    total: float
    lambda_used: float
    gamma: float = 0.0
    distortion_scale: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a dictionary of plain floats."""
        return asdict(self)


@dataclass
class TrainRecord:
    """One line of the append-only training metrics log."""

    step: int
    stage: str
    lam: float
    rate: float
    distortion: float
    penalty: float
    total: float
    sparsity: Optional[float] = None

    @classmethod
    def from_breakdown(cls, step: int, stage: str, loss: LossBreakdown,
                       sparsity: Optional[float] = None) -> 'TrainRecord':
        return cls(step=step, stage=stage, lam=loss.lambda_used, rate=loss.rate,
                   distortion=loss.distortion, penalty=loss.sparsity_penalty,
                   total=loss.total, sparsity=sparsity)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass
class FlopLedgerEntry:
    """Convolution FLOPs of one layer, before and after channel gating."""

    layer_id: str
    gated: bool
    input_channels: int
    output_channels: int
    kernel_size: int
    baseline_flops: float
    effective_flops: float
    input_channels_active: float
    output_height: int
    output_width: int

    @property
    def sparsity(self) -> float:
        """Fraction of input channels gated off, averaged over the batch."""
        return 1.0 - self.input_channels_active / self.input_channels


@dataclass
class FlopLedger:
    """Per-layer FLOP accounting for one or more forward passes."""

    entries: List[FlopLedgerEntry] = field(default_factory=list)
    module_overhead_flops: float = 0.0

    @property
    def baseline_total(self) -> float:
        return sum(e.baseline_flops for e in self.entries)

    @property
    def effective_total(self) -> float:
        return sum(e.effective_flops for e in self.entries)

    @property
    def gated_entries(self) -> List[FlopLedgerEntry]:
        return [e for e in self.entries if e.gated]

    def to_rows(self) -> List[Dict[str, Any]]:
        """Per-layer rows for tabular output."""
        rows = []
        for entry in self.entries:
            row = asdict(entry)
            row["sparsity"] = entry.sparsity
            rows.append(row)
        return rows

    def save_csv(self, output_file: str) -> None:
        """Write the ledger as a per-layer CSV table."""
        rows = self.to_rows()
        output_path = Path(output_file)
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, 'w', newline='') as csvfile:
            writer = csv.DictWriter(csvfile, fieldnames=list(rows[0].keys()) if rows else ["layer_id"])
            writer.writeheader()
            for row in rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


@dataclass
class ImageResult:
    """Rate-distortion figures of one image at one trade-off factor."""

    image: str
    lam: float
    bpp: float
    psnr: float
    sparsity: float
    bpp_actual: Optional[float] = None
    psnr_drop_db: Optional[float] = None
    psnr_drop_pct: Optional[float] = None


CSV_FIELDS = [f.name for f in fields(ImageResult)]


def _parse_csv_value(name: str, value: str):
    if name == "image":
        return value
    if value == "":
        return None
    return float(value)


@dataclass
class RDReport:
    """Rate-distortion report over images and trade-off factors."""

    results: List[ImageResult] = field(default_factory=list)
    model_storage_bytes: Optional[int] = None
    flop_reduction: Optional[float] = None
    checkpoint: Optional[str] = None
    baseline: Optional[str] = None

    def lambdas(self) -> List[float]:
        """Distinct trade-off factors in ascending order."""
        return sorted({r.lam for r in self.results})

    def aggregates(self) -> List[Dict[str, float]]:
        """Mean bpp, PSNR and sparsity per trade-off factor, plus coded bpp and PSNR drop when present."""
        summary = []
        for lam in self.lambdas():
            rows = [r for r in self.results if r.lam == lam]
            count = len(rows)
            entry = {
                "lam": lam,
                "images": count,
                "bpp": sum(r.bpp for r in rows) / count,
                "psnr": sum(r.psnr for r in rows) / count,
                "sparsity": sum(r.sparsity for r in rows) / count,
            }
            actual = [r.bpp_actual for r in rows if r.bpp_actual is not None]
            if actual:
                entry["bpp_actual"] = sum(actual) / len(actual)
            drops = [(r.psnr_drop_db, r.psnr_drop_pct) for r in rows if r.psnr_drop_db is not None]
            if drops:
                entry["psnr_drop_db"] = sum(d[0] for d in drops) / len(drops)
                entry["psnr_drop_pct"] = sum(d[1] for d in drops) / len(drops)
            summary.append(entry)
        return summary

    def to_jsonl(self) -> str:
        """Serialize as line-delimited JSON: one header line, then one line per result."""
        header = {
            "kind": "header",
            "model_storage_bytes": self.model_storage_bytes,
            "flop_reduction": self.flop_reduction,
            "checkpoint": self.checkpoint,
            "baseline": self.baseline,
        }
        lines = [json.dumps(header)]
        lines.extend(json.dumps({"kind": "result", **asdict(r)}) for r in self.results)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> 'RDReport':
        report = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            kind = record.pop("kind", None)
            if kind == "header":
                report.model_storage_bytes = record.get("model_storage_bytes")
                report.flop_reduction = record.get("flop_reduction")
                report.checkpoint = record.get("checkpoint")
                report.baseline = record.get("baseline")
            elif kind == "result":
                report.results.append(ImageResult(**record))
            else:
                raise InvalidArgumentError(f"Unknown report record kind: {kind}")
        return report

    def save(self, report_file: str, csv_file: Optional[str] = None) -> None:
        """Write the JSON-lines report and, optionally, the CSV table."""
        report_path = Path(report_file)
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(self.to_jsonl())
        if csv_file:
            self.save_csv(csv_file)

    def save_csv(self, csv_file: str) -> None:
        """One row per (image, λ)."""
        csv_path = Path(csv_file)
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(CSV_FIELDS)
            for r in self.results:
                writer.writerow([
                    repr(v) if isinstance(v, float) else ("" if v is None else v)
                    for v in (getattr(r, name) for name in CSV_FIELDS)
                ])

    @staticmethod
    def load_csv(csv_file: str) -> List[ImageResult]:
        """Parse a CSV written by ``save_csv`` back into results."""
        with open(csv_file, newline='') as f:
            reader = csv.DictReader(f)
            return [ImageResult(**{k: _parse_csv_value(k, v) for k, v in row.items()}) for row in reader]
