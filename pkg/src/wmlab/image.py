"""Image tensor conventions and helpers.

An image is a float64 numpy array of shape (H, W, C) with C in {1, 3} and
values in [0, 1]. Every public transform clamps its output back into [0, 1].
Axis convention used throughout the package: axis 0 = rows (y, vertical),
axis 1 = columns (x, horizontal). Displacement fields are indexed [row, col]
with dx = horizontal displacement and dy = vertical displacement, both in
pixel units.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError

__all__ = ["as_image", "clamp01", "check_image", "from_uint8", "to_uint8", "grayscale"]


def check_image(x: np.ndarray) -> None:
    """Raise ShapeError unless x is a (H, W, C) array with C in {1, 3}."""
    if not isinstance(x, np.ndarray) or x.ndim != 3:
        raise ShapeError(f"expected (H, W, C) array, got {getattr(x, 'shape', type(x))}")
    if x.shape[2] not in (1, 3):
        raise ShapeError(f"expected 1 or 3 channels, got {x.shape[2]}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise ShapeError(f"empty image {x.shape}")


def as_image(x: np.ndarray) -> np.ndarray:
    """Validate and normalize an array into the canonical image format.

    Accepts (H, W) or (H, W, C); returns a float64 C-contiguous (H, W, C) copy
    clamped to [0, 1].
    """
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[:, :, None]
    check_image(x)
    return clamp01(np.ascontiguousarray(x, dtype=np.float64))


def clamp01(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 1.0)


def from_uint8(x: np.ndarray) -> np.ndarray:
    """8-bit pixels to the float domain (divide by 255)."""
    return as_image(np.asarray(x, dtype=np.float64) / 255.0)


def to_uint8(x: np.ndarray) -> np.ndarray:
    return np.round(clamp01(x) * 255.0).astype(np.uint8)


def grayscale(x: np.ndarray) -> np.ndarray:
    """Mean-reduce a 3-channel image to 1 channel (no-op for 1 channel)."""
    check_image(x)
    if x.shape[2] == 1:
        return x
    return x.mean(axis=2, keepdims=True)
