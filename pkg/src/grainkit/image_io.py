"""Image representation, file IO and deterministic patch extraction.

Images are float32 numpy arrays of shape (H, W, C) with C in {1, 3} and
samples in [0, 1].  Channel order is RGB throughout.  File IO is 8-bit by
default (16-bit optional) through lossless PNG/PGM/PPM.
"""
from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import ContractError, DataError, ParameterError

SUPPORTED_SUFFIXES = {".png", ".pgm", ".ppm"}


def ensure_image(arr: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate and normalize an array to the (H, W, C) float32 contract."""
    a = np.asarray(arr)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise ContractError(f"{name}: expected (H, W, C) with C in {{1,3}}, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ContractError(f"{name}: empty spatial dims {a.shape}")
    return np.ascontiguousarray(a, dtype=np.float32)


def load_image(path) -> np.ndarray:
    """Load a raster file into a float32 [0,1] array of shape (H, W, C)."""
    p = Path(path)
    if not p.is_file():
        raise DataError(f"no such image file: {p}")
    try:
        with PILImage.open(p) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I"):
                data = np.asarray(im, dtype=np.float32) / 65535.0
            elif mode == "L":
                data = np.asarray(im, dtype=np.float32) / 255.0
            elif mode == "RGB":
                data = np.asarray(im, dtype=np.float32) / 255.0
            elif mode in ("RGBA", "LA", "P"):
                conv = im.convert("RGB")
                data = np.asarray(conv, dtype=np.float32) / 255.0
            else:
                raise DataError(f"unsupported image mode {mode!r} in {p}")
    except OSError as exc:
        raise DataError(f"unreadable image {p}: {exc}") from exc
    return ensure_image(data, str(p))


def save_image(img: np.ndarray, path, bit_depth: int = 8) -> None:
    """Write an image losslessly, clamping then rounding to the target depth.

    Out-of-range values indicate an upstream bug; they are clamped with a
    warning rather than silently wrapped.
    """
    img = ensure_image(img)
    p = Path(path)
    if not p.parent.is_dir():
        raise DataError(f"parent directory does not exist: {p.parent}")
    if bit_depth not in (8, 16):
        raise ParameterError(f"bit_depth must be 8 or 16, got {bit_depth}")
    if img.min() < 0.0 or img.max() > 1.0:
        warnings.warn(
            f"save_image: values outside [0,1] (min={img.min():.4g}, max={img.max():.4g}); clamping",
            stacklevel=2,
        )
    clipped = np.clip(img, 0.0, 1.0)
    peak = 255 if bit_depth == 8 else 65535
    quant = np.rint(clipped.astype(np.float64) * peak)
    if bit_depth == 8:
        arr = quant.astype(np.uint8)
        pil = PILImage.fromarray(arr[:, :, 0] if arr.shape[2] == 1 else arr)
    else:
        arr = quant.astype(np.uint16)
        if arr.shape[2] != 1:
            raise ParameterError("16-bit output supported for grayscale only")
        pil = PILImage.fromarray(arr[:, :, 0], mode="I;16")
    try:
        pil.save(p)
    except OSError as exc:
        raise DataError(f"cannot write image {p}: {exc}") from exc


def extract_patches(img: np.ndarray, size: int = 256, stride: int = 256) -> list[np.ndarray]:
    """Non-overlapping (or strided) patches, row-major from the top-left.

    Partial border regions are discarded; an image smaller than `size`
    yields an empty list.
    """
    if size < 1 or stride < 1:
        raise ParameterError(f"size and stride must be >= 1, got {size}, {stride}")
    img = ensure_image(img)
    h, w = img.shape[:2]
    patches = []
    for top in range(0, h - size + 1, stride):
        for left in range(0, w - size + 1, stride):
            patches.append(img[top:top + size, left:left + size].copy())
    return patches


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec.709 luma of an RGB image; grayscale passes through. Shape (H, W)."""
    img = ensure_image(img)
    if img.shape[2] == 1:
        return img[:, :, 0]
    return (0.2126 * img[:, :, 0] + 0.7152 * img[:, :, 1] + 0.0722 * img[:, :, 2]).astype(np.float32)


def pad_to_multiple(img: np.ndarray, multiple: int) -> tuple[np.ndarray, tuple[int, int]]:
    """Reflection-pad (bottom/right) so spatial dims divide `multiple`.

    Returns the padded image and the original (H, W) for crop_to_size.
    """
    img = ensure_image(img)
    h, w = img.shape[:2]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return img, (h, w)
    if ph >= h or pw >= w:
        raise ContractError(f"image {h}x{w} too small to reflection-pad to multiple of {multiple}")
    padded = np.pad(img, ((0, ph), (0, pw), (0, 0)), mode="reflect")
    return padded, (h, w)


def crop_to_size(img: np.ndarray, hw: tuple[int, int]) -> np.ndarray:
    h, w = hw
    return ensure_image(img)[:h, :w]
