"""
Training objectives and the optimization loop.

The objective is ``R + λ·s·D + γ·Σ(α - α_t)²`` where ``R`` is bits per
pixel, ``D`` the mean squared error of [0, 1] images, ``s`` the configured
distortion scale and the last term pulls every gate adjustment vector
towards its target. One λ is drawn from Λ per batch.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from torch.utils.data import DataLoader, Dataset

from .dataset import PatchDataset
from .flops import effective_flops, flop_weighted_sparsity
from ..compression.checkpoint import save_checkpoint
from ..compression.codec import DOWNSAMPLING, ForwardResult, GatedHyperpriorCodec
from ..compression.gating import ChannelGate
from ..compression.modes import Mode
from ..errors import DivergenceError, InvalidArgumentError, InvalidStateError
from ..models.config_models import TrainConfig, section_to_dict
from ..models.report_models import LossBreakdown, TrainRecord
from ..utils.logging_config import get_logger
from ..utils.validators import TensorValidator

logger = get_logger("trainer")
console = Console(stderr=True)


def rd_objective(rate: float, distortion: float, lam: float, distortion_scale: float = 1.0) -> float:
    """``R + λ·s·D`` for plain numbers."""
    return rate + lam * distortion_scale * distortion


def rd_loss(fr: ForwardResult, x: torch.Tensor, lam: float,
            distortion_scale: float = 1.0) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    Rate, distortion and ``R + λ·D`` of one forward pass.

    Args:
        fr: Codec output for ``x``
        x: Input batch
        lam: Trade-off factor
        distortion_scale: Multiplier on D (1.0 gives the bare objective)

    Returns:
        (R in bits per pixel, D as MSE, weighted sum)
    """
    TensorValidator.validate_same_shape(fr.x_hat, x)
    pixels = x.shape[0] * x.shape[-2] * x.shape[-1]
    rate = fr.total_rate_bits / pixels
    distortion = torch.mean((fr.x_hat - x) ** 2)
    return rate, distortion, rate + lam * distortion_scale * distortion


def sparsity_loss(gates: Sequence[Union[ChannelGate, torch.Tensor]], alpha_target: float) -> torch.Tensor:
    """
    Sum over all gates and channels of ``(α - α_t)²``.

    An empty gate list yields zero with a warning.
    """
    if not gates:
        logger.warning("sparsity_loss called without gates; penalty is zero")
        return torch.tensor(0.0)
    terms = [((g.alpha if isinstance(g, ChannelGate) else g) - alpha_target).pow(2).sum() for g in gates]
    return torch.stack(terms).sum()


@dataclass
class LossTerms:
    """Differentiable components of the objective."""

    rate: torch.Tensor
    distortion: torch.Tensor
    penalty: torch.Tensor
    total: torch.Tensor
    lam: float

    def breakdown(self, gamma: float, distortion_scale: float) -> LossBreakdown:
        return LossBreakdown(
            rate=self.rate.detach().item(),
            distortion=self.distortion.detach().item(),
            sparsity_penalty=self.penalty.detach().item(),
            total=self.total.detach().item(),
            lambda_used=float(self.lam),
            gamma=gamma,
            distortion_scale=distortion_scale,
        )


def objective(fr: ForwardResult, x: torch.Tensor, lam: float, cfg: TrainConfig,
              gates: Sequence[ChannelGate]) -> LossTerms:
    rate, distortion, rd_total = rd_loss(fr, x, lam, cfg.distortion_scale)
    penalty = sparsity_loss(gates, cfg.alpha_target) if gates else torch.zeros((), dtype=rate.dtype)
    return LossTerms(rate, distortion, penalty, rd_total + cfg.gamma * penalty, lam)


def total_loss(fr: ForwardResult, x: torch.Tensor, lam: float, cfg: TrainConfig,
               gates: Sequence[ChannelGate]) -> LossBreakdown:
    """Full objective ``R + λ·s·D + γ·penalty`` as a LossBreakdown."""
    return objective(fr, x, lam, cfg, gates).breakdown(cfg.gamma, cfg.distortion_scale)


def sample_lambda(cfg: TrainConfig, step: int, rng: Optional[np.random.Generator] = None) -> float:
    """Uniform draw from Λ, deterministic in (seed, step) unless an RNG is supplied."""
    if not cfg.lambda_set:
        raise InvalidArgumentError("Lambda set must not be empty")
    if rng is None:
        rng = np.random.default_rng([cfg.seed, step])
    return float(cfg.lambda_set[int(rng.integers(len(cfg.lambda_set)))])


def configure_stage(codec: GatedHyperpriorCodec, cfg: TrainConfig) -> bool:
    """
    Freeze parameter groups for the stage; returns whether gates are bypassed.

    fixed_rate trains the bare backbone, ecg adds the gates, bm_finetune
    trains the modulator pair (and the backbone unless frozen) and joint
    trains everything.
    """
    groups = codec.parameter_groups()
    trainable = {
        "fixed_rate": {"backbone"},
        "ecg": {"backbone", "gates"},
        "bm_finetune": {"modulator"} if cfg.freeze_backbone else {"backbone", "modulator"},
        "joint": {"backbone", "gates", "modulator"},
    }[cfg.stage]
    if cfg.stage == "bm_finetune" and codec.modulator is None:
        raise InvalidStateError("bm_finetune needs a codec built with use_modulator")
    for name, params in groups.items():
        for p in params:
            p.requires_grad_(name in trainable)
    return cfg.stage == "fixed_rate"


def make_optimizer(params: List[torch.nn.Parameter], cfg: TrainConfig) -> torch.optim.Optimizer:
    if cfg.optimizer == "sgd":
        return torch.optim.SGD(params, lr=cfg.learning_rate)
    return torch.optim.Adam(params, lr=cfg.learning_rate)


def iterate_batches(data: Union[Dataset, torch.Tensor], cfg: TrainConfig) -> Iterator[torch.Tensor]:
    """Endless, seeded stream of shuffled batches."""
    dataset = data if isinstance(data, Dataset) else PatchDataset(data)
    generator = torch.Generator().manual_seed(cfg.seed)
    loader = DataLoader(dataset, batch_size=min(cfg.batch_size, len(dataset)), shuffle=True,
                        generator=generator, num_workers=cfg.num_workers, drop_last=True)
    while True:
        for batch in loader:
            yield batch


@torch.no_grad()
def eval_sparsity(codec: GatedHyperpriorCodec, x: torch.Tensor, lam: float, bypass_gates: bool = False) -> float:
    """FLOP-weighted gate sparsity of an eval-mode pass."""
    if bypass_gates or not codec.gates():
        return 0.0
    was_training = codec.training
    codec.eval()
    fr = codec(x, lam, Mode.EVAL, bypass_gates=bypass_gates)
    codec.train(was_training)
    return flop_weighted_sparsity(effective_flops(fr.traces))


@dataclass
class TrainResult:
    """Outcome of a training run."""

    codec: GatedHyperpriorCodec
    records: List[TrainRecord] = field(default_factory=list)
    checkpoint_path: Optional[str] = None
    steps_completed: int = 0


def _snapshot(codec: GatedHyperpriorCodec) -> Dict[str, torch.Tensor]:
    return {k: v.detach().clone() for k, v in codec.state_dict().items()}


def _noise_seed(seed: int, step: int) -> int:
    return (seed * 1_000_003 + step) % (2 ** 63)


def train(codec: GatedHyperpriorCodec, data: Union[Dataset, torch.Tensor], cfg: TrainConfig,
          checkpoint_dir: Optional[str] = None, metrics_log: Optional[str] = None,
          show_progress: bool = False,
          on_record: Optional[Callable[[TrainRecord], None]] = None) -> TrainResult:
    """
    Optimize the codec for ``cfg.steps`` steps.

    Args:
        codec: Codec to train in place
        data: Patch dataset or (N, C, H, W) tensor with H, W divisible by 16
        cfg: Training settings (stage, Λ, γ, α_t, optimizer)
        checkpoint_dir: Where interval and final checkpoints go, if anywhere
        metrics_log: JSON-lines file that receives one record per step
        show_progress: Render a rich progress bar
        on_record: Called with every training record (e.g. a run logger)

    Returns:
        TrainResult with the per-step records

    Raises:
        DivergenceError: On a non-finite loss; the last finite parameters are
            restored and, with a checkpoint directory, written to disk
    """
    bypass_gates = configure_stage(codec, cfg)
    params = [p for p in codec.parameters() if p.requires_grad]
    optimizer = make_optimizer(params, cfg) if params else None
    gates = codec.gates()
    batches = iterate_batches(data, cfg)
    records: List[TrainRecord] = []
    checkpoint_root = Path(checkpoint_dir) if checkpoint_dir else None
    train_config = section_to_dict(cfg)

    log_file = None
    if metrics_log:
        Path(metrics_log).parent.mkdir(parents=True, exist_ok=True)
        log_file = open(metrics_log, 'a')

    logger.info(f"Training stage={cfg.stage} steps={cfg.steps} lambdas={len(cfg.lambda_set)} "
                f"gamma={cfg.gamma} trainable={sum(p.numel() for p in params)}")
    last_good = _snapshot(codec)
    step = 0
    try:
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            TimeElapsedColumn(),
            console=console,
            disable=not show_progress,
        ) as progress:
            task = progress.add_task(f"Training ({cfg.stage})", total=cfg.steps)
            for step in range(cfg.steps):
                x = next(batches)
                TensorValidator.validate_divisible(x, DOWNSAMPLING, "batch")
                lam = sample_lambda(cfg, step)
                codec.train()
                generator = torch.Generator().manual_seed(_noise_seed(cfg.seed, step))

                if cfg.penalty_only:
                    with torch.no_grad():
                        fr = codec(x, lam, Mode.TRAIN, generator, bypass_gates)
                else:
                    fr = codec(x, lam, Mode.TRAIN, generator, bypass_gates)
                terms = objective(fr, x, lam, cfg, gates)

                if not math.isfinite(terms.total.detach().item()):
                    codec.load_state_dict(last_good)
                    codec.eval()
                    saved = None
                    if checkpoint_root is not None:
                        saved = str(checkpoint_root / "diverged.pt")
                        save_checkpoint(saved, codec, cfg.stage, cfg.lambda_set, step, train_config)
                    raise DivergenceError(f"Non-finite loss at step {step} (lambda={lam})",
                                          checkpoint_path=saved, step=step)

                loss = cfg.gamma * terms.penalty if cfg.penalty_only else terms.total
                last_good = _snapshot(codec)
                if optimizer is not None and loss.requires_grad:
                    optimizer.zero_grad()
                    loss.backward()
                    if cfg.grad_clip > 0:
                        torch.nn.utils.clip_grad_norm_(params, cfg.grad_clip)
                    optimizer.step()

                sparsity = None
                if (step + 1) % cfg.log_interval == 0 or step + 1 == cfg.steps:
                    sparsity = eval_sparsity(codec, x, lam, bypass_gates)
                breakdown = terms.breakdown(cfg.gamma, cfg.distortion_scale)
                record = TrainRecord.from_breakdown(step, cfg.stage, breakdown, sparsity)
                records.append(record)
                if log_file is not None:
                    log_file.write(record.to_json() + "\n")
                    log_file.flush()
                if on_record is not None:
                    on_record(record)

                if checkpoint_root is not None and (step + 1) % cfg.checkpoint_interval == 0:
                    save_checkpoint(str(checkpoint_root / f"step_{step + 1:06d}.pt"), codec,
                                    cfg.stage, cfg.lambda_set, step + 1, train_config)
                progress.advance(task)
    finally:
        if log_file is not None:
            log_file.close()
        for p in codec.parameters():
            p.requires_grad_(True)
        codec.eval()

    final_path = None
    if checkpoint_root is not None:
        final_path = str(checkpoint_root / "final.pt")
        save_checkpoint(final_path, codec, cfg.stage, cfg.lambda_set, cfg.steps, train_config)
    return TrainResult(codec=codec, records=records, checkpoint_path=final_path, steps_completed=len(records))
