"""Shared numeric operations every transform builds on.

Public contracts over the kernel backends: inverse-mapped resampling with an
explicit displacement field, and 2-D convolution. See wmlab.image for the
axis/field conventions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ParameterError, ShapeError
from .image import as_image, clamp01

__all__ = ["DisplacementField", "resample", "convolve2d", "gaussian_kernel1d",
           "gaussian_kernel2d"]


@dataclass
class DisplacementField:
    """Per-pixel sampling displacements in pixel units, indexed [row, col].

    dx is horizontal (column) displacement, dy vertical (row); the consumer
    samples the source at (row + dy, col + dx).
    """

    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        self.dx = np.ascontiguousarray(self.dx, dtype=np.float64)
        self.dy = np.ascontiguousarray(self.dy, dtype=np.float64)
        if self.dx.ndim != 2 or self.dx.shape != self.dy.shape:
            raise ShapeError(
                f"dx/dy must be matching 2-D grids, got {self.dx.shape} vs {self.dy.shape}"
            )

    @classmethod
    def zero(cls, height: int, width: int) -> "DisplacementField":
        return cls(np.zeros((height, width)), np.zeros((height, width)))

    def max_abs(self) -> tuple[float, float]:
        """(max |dx|, max |dy|) over the grid."""
        return float(np.abs(self.dx).max()), float(np.abs(self.dy).max())

    def within_bound(self, gamma: float) -> bool:
        mx, my = self.max_abs()
        return mx <= gamma and my <= gamma


def resample(src: np.ndarray, field: DisplacementField, fill: str = "clamp") -> np.ndarray:
    """Bilinear inverse-mapped resampling of src along a displacement field.

    output(r, c) samples src at (r + dy, c + dx). Out-of-bounds coordinates
    clamp to the edge pixel (fill="clamp") or yield 0 (fill="zero"). The zero
    field reproduces src exactly.
    """
    src = as_image(src)
    if field.dx.shape != src.shape[:2]:
        raise ShapeError(f"field {field.dx.shape} does not match image {src.shape[:2]}")
    if fill not in ("clamp", "zero"):
        raise ParameterError(f"unknown fill policy {fill!r}")
    out = kernels.bilinear_warp(src, field.dx, field.dy, fill_zero=(fill == "zero"))
    return clamp01(out)


def convolve2d(src: np.ndarray, kernel: np.ndarray, border: str = "reflect") -> np.ndarray:
    """Per-channel true 2-D convolution (kernel flipped) with reflected border.

    The border reflection is edge-inclusive (symmetric). Kernel sides must be
    odd. Output is clamped back to [0, 1].
    """
    src = as_image(src)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2:
        raise ParameterError(f"kernel must be 2-D, got shape {kernel.shape}")
    if kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ParameterError(f"kernel sides must be odd, got {kernel.shape}")
    if border != "reflect":
        raise ParameterError(f"unsupported border policy {border!r}")
    return clamp01(kernels.convolve2d(src, kernel))


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian truncated at radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    radius = int(np.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_kernel2d(sigma: float) -> np.ndarray:
    """Normalized 2-D Gaussian truncated at radius ceil(3*sigma)."""
    k = gaussian_kernel1d(sigma)
    k2 = np.outer(k, k)
    return k2 / k2.sum()
