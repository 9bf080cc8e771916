"""
Dataset ingestion and the training patch store.

Source images are tiled into non-overlapping square patches at several
bicubic downsampling scales. Patches are stored as one uint8 array in
``patches.npz``; ``manifest.json`` records where each patch came from.
"""

import json
import os
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset

from ..errors import DataError, InvalidArgumentError
from ..utils.image_io import list_images, load_pil
from ..utils.logging_config import get_logger
from ..utils.validators import PathValidator

logger = get_logger("dataset")

DATA_DIR_ENV = "GCODEC_DATA_DIR"
PATCHES_FILE = "patches.npz"
MANIFEST_FILE = "manifest.json"


@dataclass
class PatchRecord:
    """Provenance of one patch."""

    index: int
    source: str
    scale: int
    top: int
    left: int


@dataclass
class PatchManifest:
    """Manifest of a patch store."""

    patch_size: int
    scales: List[int]
    sources: List[str] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)
    patches: List[PatchRecord] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.patches)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["count"] = self.count
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'PatchManifest':
        return cls(
            patch_size=data["patch_size"],
            scales=list(data["scales"]),
            sources=list(data.get("sources", [])),
            skipped=list(data.get("skipped", [])),
            patches=[PatchRecord(**p) for p in data.get("patches", [])],
        )


def resolve_data_dir(path: Optional[str]) -> str:
    """Explicit path, else ``$GCODEC_DATA_DIR``."""
    resolved = path or os.environ.get(DATA_DIR_ENV)
    if not resolved:
        raise InvalidArgumentError(f"No dataset directory given and {DATA_DIR_ENV} is not set")
    return resolved


def _downsample(img: Image.Image, scale: int) -> Image.Image:
    if scale == 1:
        return img
    width, height = img.size
    return img.resize((max(1, width // scale), max(1, height // scale)), Image.BICUBIC)


def _tile(array: np.ndarray, patch: int):
    height, width = array.shape[:2]
    for top in range(0, height - patch + 1, patch):
        for left in range(0, width - patch + 1, patch):
            yield top, left, array[top:top + patch, left:left + patch]


def ingest_dataset(src: str, out: str, patch: int = 64, scales: Sequence[int] = (1, 2, 4)) -> PatchManifest:
    """
    Tile every decodable image of ``src`` into patches.

    Images are visited in sorted order and tiled from the top-left corner,
    so the same source always yields the same store. Undecodable files are
    skipped with a warning.

    Args:
        src: Directory of source images
        out: Output directory of the patch store
        patch: Patch side in pixels
        scales: Downsampling factors (1 keeps the original resolution)

    Returns:
        The written manifest

    Raises:
        DataError: If no patch could be extracted
    """
    if patch <= 0:
        raise InvalidArgumentError(f"patch must be positive, got {patch}")
    if not scales or any(int(s) < 1 for s in scales):
        raise InvalidArgumentError("scales must be positive integers")
    source_dir = PathValidator.validate_directory(src)

    manifest = PatchManifest(patch_size=patch, scales=[int(s) for s in scales])
    arrays: List[np.ndarray] = []
    for path in list_images(str(source_dir)):
        try:
            img = load_pil(str(path))
        except DataError as e:
            logger.warning(f"Skipping {path.name}: {e}")
            manifest.skipped.append(path.name)
            continue
        manifest.sources.append(path.name)
        for scale in manifest.scales:
            array = np.asarray(_downsample(img, scale), dtype=np.uint8)
            for top, left, tile in _tile(array, patch):
                manifest.patches.append(PatchRecord(len(arrays), path.name, scale, top, left))
                arrays.append(tile)

    if not arrays:
        raise DataError(f"No {patch}x{patch} patches could be extracted from {src}")

    output_dir = Path(out)
    output_dir.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(output_dir / PATCHES_FILE, patches=np.stack(arrays))
    with open(output_dir / MANIFEST_FILE, 'w') as f:
        json.dump(manifest.to_dict(), f, indent=2)

    logger.info(f"Ingested {len(manifest.sources)} images into {manifest.count} patches at {output_dir}")
    return manifest


def load_manifest(store: str) -> PatchManifest:
    manifest_path = Path(store) / MANIFEST_FILE
    if not manifest_path.is_file():
        raise DataError(f"No patch manifest in {store}")
    with open(manifest_path) as f:
        return PatchManifest.from_dict(json.load(f))


def load_patches(store: str) -> torch.Tensor:
    """All patches of a store as a float (N, 3, P, P) tensor in [0, 1]."""
    patches_path = Path(store) / PATCHES_FILE
    if not patches_path.is_file():
        raise DataError(f"No patch file in {store}")
    with np.load(patches_path) as data:
        patches = data["patches"]
    return torch.from_numpy(patches.astype(np.float32) / 255.0).permute(0, 3, 1, 2).contiguous()


class PatchDataset(Dataset):
    """Training patches held in memory."""

    def __init__(self, patches: torch.Tensor):
        if patches.dim() != 4 or patches.shape[0] == 0:
            raise DataError("Patch tensor must be a non-empty (N, C, H, W) tensor")
        self.patches = patches

    @classmethod
    def from_store(cls, store: str) -> 'PatchDataset':
        return cls(load_patches(store))

    def __len__(self) -> int:
        return self.patches.shape[0]

    def __getitem__(self, index: int) -> torch.Tensor:
        return self.patches[index]
