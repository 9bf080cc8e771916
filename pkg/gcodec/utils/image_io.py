"""
Image I/O helpers.

8-bit PNG/PPM images are read into [0, 1] float tensors of shape
(1, C, H, W) and written back as 8-bit with round-half-away quantization.
"""

from pathlib import Path
from typing import Tuple

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, UnidentifiedImageError

from ..errors import DataError

IMAGE_SUFFIXES = ('.png', '.ppm', '.pgm', '.jpg', '.jpeg', '.bmp')


def list_images(directory: str) -> list:
    """Image files of a directory in sorted (deterministic) order."""
    return sorted(p for p in Path(directory).iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def load_pil(path: str) -> Image.Image:
    """Open an image as RGB, raising DataError when it cannot be decoded."""
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (UnidentifiedImageError, OSError) as e:
        raise DataError(f"Cannot decode image {path}: {e}")


def pil_to_tensor(img: Image.Image) -> torch.Tensor:
    array = np.asarray(img, dtype=np.float32) / 255.0
    return torch.from_numpy(array).permute(2, 0, 1).unsqueeze(0).contiguous()


def load_image(path: str) -> torch.Tensor:
    """Read an 8-bit image into a (1, 3, H, W) float tensor in [0, 1]."""
    return pil_to_tensor(load_pil(path))


def to_uint8(x: torch.Tensor) -> np.ndarray:
    """Quantize a [0, 1] tensor of shape (1, C, H, W) to an HxWxC uint8 array."""
    values = x.detach().to(torch.float64).clamp(0.0, 1.0)[0].permute(1, 2, 0).cpu().numpy()
    # values are non-negative, so floor(v + 0.5) rounds half away from zero
    return np.floor(values * 255.0 + 0.5).astype(np.uint8)


def save_image(x: torch.Tensor, path: str) -> None:
    """Write a (1, 3, H, W) tensor as an 8-bit image."""
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(x)).save(output_path)


def pad_to_multiple(x: torch.Tensor, factor: int = 16) -> Tuple[torch.Tensor, Tuple[int, int]]:
    """
    Reflect-pad the bottom/right edges up to a multiple of ``factor``.

    Args:
        x: (B, C, H, W) image tensor
        factor: Required divisor of the spatial dims

    Returns:
        The padded tensor and the original (height, width)
    """
    height, width = x.shape[-2:]
    pad_h = (-height) % factor
    pad_w = (-width) % factor
    if pad_h == 0 and pad_w == 0:
        return x, (height, width)
    # reflect needs the pad to be smaller than the dim
    mode = "reflect" if pad_h < height and pad_w < width else "replicate"
    return F.pad(x, (0, pad_w, 0, pad_h), mode=mode), (height, width)


def crop(x: torch.Tensor, size: Tuple[int, int]) -> torch.Tensor:
    """Crop a padded tensor back to its original (height, width)."""
    height, width = size
    return x[..., :height, :width]
