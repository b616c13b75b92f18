"""Image transformations.

The scale / pattern-embed / spatial-warp preprocessing pipeline and its
constituents, plus the simple baseline transforms (bit-depth reduction,
Gaussian blur) and the augmentation warps (shear, rotate).

Randomized transforms take an explicit RngStream and follow a fixed draw
protocol so runs replay exactly; the composed `pst` draws, in order: median
row offset, median column offset, affine (u_theta, u_tx, u_ty), elastic dx
field, elastic dy field. Draws are issued even when a parameter disables the
stage (gamma = 0, alpha = 0), so a given seed produces common random numbers
across strength settings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ParameterError
from .image import as_image, clamp01
from .numerics import DisplacementField, convolve2d, gaussian_kernel2d, resample
from .rng import RngStream

__all__ = [
    "PstConfig", "AffineMap", "bicubic_scale", "bicubic_resize_to",
    "median_grid_embed", "grid_masks", "sample_affine", "apply_affine",
    "elastic_field", "elastic_deform", "pst", "bit_depth_reduce",
    "gaussian_blur", "shear_x", "rotate",
]


@dataclass(frozen=True)
class PstConfig:
    """Parameters of the scale + pattern + spatial-warp pipeline.

    beta: nominal up-scaling factor (> 0)
    target_size: fixed (square) size after up-scaling; None derives it from beta
    interval: grid interval v (pixels) of the pattern-embedding filter
    gamma: per-axis displacement bound, in scaled-resolution pixels
    sigma: Gaussian std used to smooth the elastic fields
    alpha: elastic intensity (max field magnitude); None means gamma
    pattern_filter: "median" (default) or "max"
    """

    beta: float = 5.0
    target_size: int | None = 160
    interval: int = 5
    gamma: float = 15.0
    sigma: float = 4.0
    alpha: float | None = None
    pattern_filter: str = "median"

    def __post_init__(self):
        if self.beta <= 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if self.interval < 1:
            raise ParameterError(f"interval must be >= 1, got {self.interval}")
        if self.gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if self.alpha is not None and not 0 <= self.alpha <= self.gamma:
            raise ParameterError(f"alpha must lie in [0, gamma], got {self.alpha}")
        if self.pattern_filter not in ("median", "max"):
            raise ParameterError(f"unknown pattern filter {self.pattern_filter!r}")

    @property
    def effective_alpha(self) -> float:
        return self.gamma if self.alpha is None else self.alpha


@dataclass(frozen=True)
class AffineMap:
    """2x3 affine map on (x, y) = (col, row) coordinates.

    Maps (x, y) to (a11*x + a12*y + b1, a21*x + a22*y + b2).
    """

    a11: float
    a12: float
    a21: float
    a22: float
    b1: float
    b2: float

    @classmethod
    def identity(cls) -> "AffineMap":
        return cls(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)

    @classmethod
    def translation(cls, tx: float, ty: float) -> "AffineMap":
        return cls(1.0, 0.0, 0.0, 1.0, tx, ty)

    @classmethod
    def shear_x(cls, s: float) -> "AffineMap":
        return cls(1.0, s, 0.0, 1.0, 0.0, 0.0)

    @classmethod
    def rotation_translation(cls, theta: float, tx: float, ty: float,
                             cx: float, cy: float) -> "AffineMap":
        """Rotate by theta about (cx, cy), then translate by (tx, ty)."""
        c, s = math.cos(theta), math.sin(theta)
        return cls(c, -s, s, c,
                   cx - (c * cx - s * cy) + tx,
                   cy - (s * cx + c * cy) + ty)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12, self.b1],
                         [self.a21, self.a22, self.b2]], dtype=np.float64)

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def inverse(self) -> "AffineMap":
        d = self.det()
        if not math.isfinite(d) or abs(d) < 1e-12:
            raise ParameterError(f"affine map is singular (det={d})")
        i11, i12 = self.a22 / d, -self.a12 / d
        i21, i22 = -self.a21 / d, self.a11 / d
        return AffineMap(i11, i12, i21, i22,
                         -(i11 * self.b1 + i12 * self.b2),
                         -(i21 * self.b1 + i22 * self.b2))

    def apply(self, x, y):
        """Map coordinate arrays (x, y) -> (x~, y~)."""
        return (self.a11 * x + self.a12 * y + self.b1,
                self.a21 * x + self.a22 * y + self.b2)

    def max_displacement(self, height: int, width: int) -> float:
        """Largest per-axis coordinate displacement over the image extent.

        The displacement of an affine map is affine in (x, y), so the maximum
        over the rectangle is attained at a corner.
        """
        worst = 0.0
        for y in (0.0, height - 1.0):
            for x in (0.0, width - 1.0):
                tx, ty = self.apply(x, y)
                worst = max(worst, abs(tx - x), abs(ty - y))
        return worst


# -- scaling ----------------------------------------------------------------

def bicubic_scale(x: np.ndarray, factor: float) -> np.ndarray:
    """Resize by a scale factor with the 4x4 bicubic kernel (a = -0.5).

    Output dimensions are round(input * factor). factor = 1 is an exact
    identity.
    """
    x = as_image(x)
    if factor <= 0:
        raise ParameterError(f"scale factor must be > 0, got {factor}")
    out_h = int(round(x.shape[0] * factor))
    out_w = int(round(x.shape[1] * factor))
    if out_h < 1 or out_w < 1:
        raise ParameterError(f"scale factor {factor} collapses {x.shape[:2]} below 1 pixel")
    return clamp01(kernels.bicubic_resize(x, out_h, out_w))


def bicubic_resize_to(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize to explicit dimensions with the 4x4 bicubic kernel."""
    x = as_image(x)
    if out_h < 1 or out_w < 1:
        raise ParameterError(f"target dimensions must be >= 1, got {(out_h, out_w)}")
    return clamp01(kernels.bicubic_resize(x, out_h, out_w))


# -- pattern embedding ------------------------------------------------------

def grid_masks(height: int, width: int, interval: int,
               row_offset: int, col_offset: int) -> tuple[np.ndarray, np.ndarray]:
    """Boolean row/column selection masks for lines at the given interval."""
    rows = np.zeros(height, dtype=np.uint8)
    cols = np.zeros(width, dtype=np.uint8)
    if row_offset < height:
        rows[row_offset::interval] = 1
    if col_offset < width:
        cols[col_offset::interval] = 1
    return rows, cols


def median_grid_embed(x: np.ndarray, interval: int, rng: RngStream,
                      use_max: bool = False) -> np.ndarray:
    """Median-filter the pixels on a random grid of rows and columns.

    Rows and columns are selected at the given interval starting from
    independent random offsets in [0, interval) (rows drawn first). Selected
    pixels are replaced by the median (or max) of their 3x3 neighbourhood,
    computed on a snapshot of the input; all other pixels pass through
    unchanged. Offsets beyond the image extent select nothing.
    """
    x = as_image(x)
    if interval < 1:
        raise ParameterError(f"interval must be >= 1, got {interval}")
    row_off = int(rng.integers(0, interval))
    col_off = int(rng.integers(0, interval))
    rows, cols = grid_masks(x.shape[0], x.shape[1], interval, row_off, col_off)
    return kernels.grid_median(x, rows, cols, use_max=use_max)


# -- spatial transforms -----------------------------------------------------

def sample_affine(gamma: float, extent: tuple[int, int], rng: RngStream) -> AffineMap:
    """Draw a random rotation + translation within the displacement bound.

    The budget is split evenly: rotation angle |theta| <= (gamma/2)/r with r
    the half-diagonal of the extent (worst-case corner displacement gamma/2),
    and translation components uniform in [-gamma/2, gamma/2]. Every pixel of
    the extent then moves at most gamma per axis.
    """
    if gamma < 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    height, width = extent
    u_theta, u_tx, u_ty = rng.uniform(-1.0, 1.0, 3)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    r = math.hypot(cx, cy)
    theta = u_theta * (gamma / 2.0) / r if r > 0 else 0.0
    return AffineMap.rotation_translation(
        theta, u_tx * (gamma / 2.0), u_ty * (gamma / 2.0), cx, cy
    )


def apply_affine(x: np.ndarray, m: AffineMap, fill: str = "clamp") -> np.ndarray:
    """Warp an image by an affine map using inverse mapping.

    output(r, c) bilinearly samples the input at m^-1(c, r). Raises for a
    singular or non-finite linear part.
    """
    x = as_image(x)
    vals = (m.a11, m.a12, m.a21, m.a22, m.b1, m.b2)
    if not all(math.isfinite(v) for v in vals):
        raise ParameterError(f"affine map has non-finite coefficients {vals}")
    inv = m.inverse()
    height, width = x.shape[:2]
    xs = np.arange(width, dtype=np.float64)[None, :]
    ys = np.arange(height, dtype=np.float64)[:, None]
    sx, sy = inv.apply(xs, ys)
    field = DisplacementField(sx - xs, sy - ys)
    return resample(x, field, fill=fill)


def elastic_field(height: int, width: int, sigma: float, alpha: float,
                  rng: RngStream) -> DisplacementField:
    """Draw a smoothed random displacement field with max magnitude alpha.

    Per-pixel uniform [-1, 1] fields (dx drawn first, then dy) are smoothed
    with a Gaussian of std sigma and rescaled per axis so the maximum absolute
    displacement equals alpha exactly (zero stays zero).
    """
    k = np.exp(-(np.arange(-int(np.ceil(3.0 * sigma)),
                           int(np.ceil(3.0 * sigma)) + 1, dtype=np.float64) ** 2)
               / (2.0 * sigma * sigma))
    k /= k.sum()

    def one(raw: np.ndarray) -> np.ndarray:
        smooth = kernels.sep_convolve2d(raw[:, :, None], k, k)[:, :, 0]
        peak = np.abs(smooth).max()
        if peak == 0.0 or alpha == 0.0:
            return np.zeros_like(smooth)
        return smooth / peak * alpha

    dx = one(rng.uniform(-1.0, 1.0, (height, width)))
    dy = one(rng.uniform(-1.0, 1.0, (height, width)))
    return DisplacementField(dx, dy)


def elastic_deform(x: np.ndarray, sigma: float, alpha: float, gamma: float,
                   rng: RngStream) -> np.ndarray:
    """Random elastic distortion with per-axis displacement exactly alpha.

    alpha must not exceed the displacement bound gamma.
    """
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    if not 0 <= alpha <= gamma:
        raise ParameterError(f"alpha must lie in [0, gamma], got alpha={alpha} gamma={gamma}")
    x = as_image(x)
    field = elastic_field(x.shape[0], x.shape[1], sigma, alpha, rng)
    return resample(x, field)


# -- the composed pipeline --------------------------------------------------

def pst_target_dims(x_shape: tuple[int, ...], cfg: PstConfig) -> tuple[int, int]:
    if cfg.target_size is not None:
        return cfg.target_size, cfg.target_size
    return (max(1, int(round(x_shape[0] * cfg.beta))),
            max(1, int(round(x_shape[1] * cfg.beta))))


def pst(x: np.ndarray, cfg: PstConfig, rng: RngStream) -> np.ndarray:
    """Scale up, embed a random filter grid, warp (affine then elastic), scale back.

    The output has the input's dimensions. All randomness comes from `rng`
    following the module-level draw protocol.
    """
    x = as_image(x)
    orig_h, orig_w = x.shape[:2]
    th, tw = pst_target_dims(x.shape, cfg)
    up = bicubic_resize_to(x, th, tw)
    patterned = median_grid_embed(up, cfg.interval, rng,
                                  use_max=(cfg.pattern_filter == "max"))
    m = sample_affine(cfg.gamma, (th, tw), rng)
    warped = apply_affine(patterned, m)
    distorted = elastic_deform(warped, cfg.sigma, cfg.effective_alpha, cfg.gamma, rng)
    return bicubic_resize_to(distorted, orig_h, orig_w)


# -- baseline and augmentation transforms -----------------------------------

def bit_depth_reduce(x: np.ndarray, bits: int) -> np.ndarray:
    """Quantize each value to 2^bits levels."""
    if not isinstance(bits, (int, np.integer)) or not 1 <= bits <= 8:
        raise ParameterError(f"bits must be an integer in [1, 8], got {bits}")
    x = as_image(x)
    levels = float(2 ** bits - 1)
    return np.round(x * levels) / levels


def gaussian_blur(x: np.ndarray, sigma: float) -> np.ndarray:
    """Blur with a truncated (radius ceil(3*sigma)) normalized Gaussian."""
    return convolve2d(as_image(x), gaussian_kernel2d(sigma))


def shear_x(x: np.ndarray, s: float) -> np.ndarray:
    """Horizontal shear: the affine map [[1, s, 0], [0, 1, 0]]."""
    if not math.isfinite(s):
        raise ParameterError(f"shear factor must be finite, got {s}")
    return apply_affine(x, AffineMap.shear_x(s))


def rotate(x: np.ndarray, degrees: float) -> np.ndarray:
    """Rotation about the image center, in degrees."""
    if not math.isfinite(degrees):
        raise ParameterError(f"angle must be finite, got {degrees}")
    x = as_image(x)
    cx, cy = (x.shape[1] - 1) / 2.0, (x.shape[0] - 1) / 2.0
    m = AffineMap.rotation_translation(math.radians(degrees), 0.0, 0.0, cx, cy)
    return apply_affine(x, m)
