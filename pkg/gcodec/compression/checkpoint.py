"""
Checkpoint persistence.

A checkpoint is a ``torch.save`` container holding the format version, the
codec configuration, training metadata, the full ``state_dict`` and a 64-bit
checksum of the parameters. The checksum also identifies the model inside
bitstreams.
"""

import hashlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import torch

from .codec import GatedHyperpriorCodec
from ..errors import DataError, UnsupportedFormatError
from ..models.config_models import CodecConfig, config_from_dict
from ..utils.logging_config import get_logger

logger = get_logger("checkpoint")

FORMAT_VERSION = 1


def model_checksum(model: Union[GatedHyperpriorCodec, Mapping[str, torch.Tensor]]) -> int:
    """BLAKE2b-64 over every tensor (name, dtype, shape, bytes) in sorted key order."""
    state = model.state_dict() if isinstance(model, torch.nn.Module) else model
    digest = hashlib.blake2b(digest_size=8)
    for key in sorted(state):
        tensor = state[key].detach().cpu().contiguous()
        digest.update(key.encode("utf-8"))
        digest.update(str(tensor.dtype).encode("utf-8"))
        digest.update(str(tuple(tensor.shape)).encode("utf-8"))
        digest.update(tensor.numpy().tobytes())
    return int.from_bytes(digest.digest(), "big")


def parameter_bytes(model: Union[GatedHyperpriorCodec, Mapping[str, torch.Tensor]]) -> int:
    """Bytes taken by the serialized parameter tensors."""
    state = model.state_dict() if isinstance(model, torch.nn.Module) else model
    return sum(t.numel() * t.element_size() for t in state.values())


@dataclass
class LoadedCheckpoint:
    """A restored codec plus the metadata saved with it."""

    codec: GatedHyperpriorCodec
    path: str
    checksum: int
    stage: Optional[str] = None
    lambda_set: List[float] = field(default_factory=list)
    step: int = 0
    train_config: Optional[Dict[str, Any]] = None


def save_checkpoint(path: str, codec: GatedHyperpriorCodec, stage: Optional[str] = None,
                    lambda_set: Optional[List[float]] = None, step: int = 0,
                    train_config: Optional[Dict[str, Any]] = None) -> int:
    """
    Write a checkpoint.

    Returns:
        The model checksum stored in the file
    """
    state_dict = {k: v.detach().cpu().clone() for k, v in codec.state_dict().items()}
    checksum = model_checksum(state_dict)
    payload = {
        "format_version": FORMAT_VERSION,
        "codec_config": asdict(codec.cfg),
        "train_config": train_config,
        "stage": stage,
        "lambda_set": [float(lam) for lam in (lambda_set or [])],
        "step": int(step),
        "state_dict": state_dict,
        "checksum": checksum,
    }
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, output_path)
    logger.info(f"Saved checkpoint {output_path} (stage={stage}, step={step}, checksum={checksum:016x})")
    return checksum


def load_checkpoint(path: str) -> LoadedCheckpoint:
    """
    Restore a codec from a checkpoint.

    Raises:
        DataError: Missing, unreadable or corrupted file
        UnsupportedFormatError: Unknown format version
    """
    checkpoint_path = Path(path)
    if not checkpoint_path.is_file():
        raise DataError(f"Checkpoint not found: {path}")
    try:
        payload = torch.load(checkpoint_path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise DataError(f"Cannot read checkpoint {path}: {e}")

    if not isinstance(payload, dict) or "format_version" not in payload:
        raise UnsupportedFormatError(f"{path} is not a gcodec checkpoint")
    if payload["format_version"] != FORMAT_VERSION:
        raise UnsupportedFormatError(
            f"Checkpoint format {payload['format_version']} is not supported (expected {FORMAT_VERSION})"
        )

    cfg = config_from_dict(CodecConfig, payload["codec_config"])
    codec = GatedHyperpriorCodec(cfg)
    try:
        codec.load_state_dict(payload["state_dict"], strict=True)
    except RuntimeError as e:
        raise DataError(f"Checkpoint {path} does not match its configuration: {e}")
    codec.eval()

    checksum = model_checksum(codec)
    if checksum != payload.get("checksum"):
        raise DataError(f"Checkpoint {path} is corrupted (checksum mismatch)")

    logger.debug(f"Loaded checkpoint {path} (stage={payload.get('stage')}, checksum={checksum:016x})")
    return LoadedCheckpoint(
        codec=codec,
        path=str(checkpoint_path),
        checksum=checksum,
        stage=payload.get("stage"),
        lambda_set=list(payload.get("lambda_set") or []),
        step=int(payload.get("step", 0)),
        train_config=payload.get("train_config"),
    )
