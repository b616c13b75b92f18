"""Pure numpy kernel backend.

Reference implementations of the shared image kernels. The compiled backend
(`wmlab.kernels._native`) mirrors these element for element, including the
floating-point accumulation order, so both backends agree bit for bit.

All kernels take float64 C-contiguous arrays of shape (H, W, C) where C is
any channel count >= 1 (the image-level 1-or-3 restriction lives above this
layer). Kernels never clamp values: callers decide the output domain.

Border conventions:
  * warps and bicubic taps clamp to the edge pixel,
  * convolution and the median window reflect symmetrically (edge-inclusive),
    folding indices with period 2N so any kernel radius works on any size.
"""
from __future__ import annotations

import numpy as np

NAME = "pure"


def _reflect_indices(idx: np.ndarray, n: int) -> np.ndarray:
    """Symmetric (edge-inclusive) fold of arbitrary indices into [0, n)."""
    period = 2 * n
    m = np.mod(idx, period)
    return np.where(m >= n, period - 1 - m, m)


def bilinear_warp(src: np.ndarray, dx: np.ndarray, dy: np.ndarray,
                  fill_zero: bool = False) -> np.ndarray:
    """Sample src at (row + dy, col + dx) with bilinear weights.

    Out-of-range sample coordinates clamp to the edge pixel, or produce 0.0
    when fill_zero is set. A zero field reproduces src exactly.
    """
    h, w, _ = src.shape
    ys = np.arange(h, dtype=np.float64)[:, None] + dy
    xs = np.arange(w, dtype=np.float64)[None, :] + dx
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    fy = ys - y0
    fx = xs - x0
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    w00 = (1.0 - fy) * (1.0 - fx)
    w01 = (1.0 - fy) * fx
    w10 = fy * (1.0 - fx)
    w11 = fy * fx
    out = (src[y0c, x0c] * w00[:, :, None]
           + src[y0c, x1c] * w01[:, :, None]
           + src[y1c, x0c] * w10[:, :, None]
           + src[y1c, x1c] * w11[:, :, None])
    if fill_zero:
        inside = (xs >= 0.0) & (xs <= w - 1.0) & (ys >= 0.0) & (ys <= h - 1.0)
        out *= inside[:, :, None]
    return out


def _cubic_taps(n_in: int, n_out: int):
    """Tap indices (4, n_out) and Catmull-Rom weights (4, n_out) for one axis.

    Pixel-center mapping: src = (o + 0.5) * n_in/n_out - 0.5; taps outside the
    axis clamp to the edge. n_out == n_in yields exact identity taps.
    """
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    base = np.floor(src)
    t = src - base
    base = base.astype(np.int64)
    idx = np.stack([np.clip(base + k, 0, n_in - 1) for k in (-1, 0, 1, 2)])
    w0 = ((-0.5 * t + 1.0) * t - 0.5) * t
    w1 = (1.5 * t - 2.5) * t * t + 1.0
    w2 = ((-1.5 * t + 2.0) * t + 0.5) * t
    w3 = (0.5 * t - 0.5) * t * t
    return idx, np.stack([w0, w1, w2, w3])


def bicubic_resize(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable 4x4 bicubic (a = -0.5) resize; vertical pass then horizontal."""
    ridx, rw = _cubic_taps(src.shape[0], out_h)
    tmp = (src[ridx[0]] * rw[0][:, None, None]
           + src[ridx[1]] * rw[1][:, None, None]
           + src[ridx[2]] * rw[2][:, None, None]
           + src[ridx[3]] * rw[3][:, None, None])
    cidx, cw = _cubic_taps(src.shape[1], out_w)
    return (tmp[:, cidx[0]] * cw[0][None, :, None]
            + tmp[:, cidx[1]] * cw[1][None, :, None]
            + tmp[:, cidx[2]] * cw[2][None, :, None]
            + tmp[:, cidx[3]] * cw[3][None, :, None])


def grid_median(src: np.ndarray, row_sel: np.ndarray, col_sel: np.ndarray,
                use_max: bool = False) -> np.ndarray:
    """Replace pixels on selected rows/columns by their 3x3 median (or max).

    The window reads a snapshot of src (no cascading) and reflects at borders,
    so it always holds 9 values and the median is an exact element.
    """
    h, w, c = src.shape
    out = src.copy()
    mask = row_sel.astype(bool)[:, None] | col_sel.astype(bool)[None, :]
    rr, cc = np.nonzero(mask)
    if rr.size == 0:
        return out
    vals = np.empty((9, rr.size, c), dtype=np.float64)
    k = 0
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            vals[k] = src[np.clip(rr + dr, 0, h - 1), np.clip(cc + dc, 0, w - 1)]
            k += 1
    vals.sort(axis=0)
    out[rr, cc] = vals[8] if use_max else vals[4]
    return out


def convolve2d(src: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Per-channel true 2-D convolution (kernel flipped), symmetric border."""
    kh, kw = kernel.shape
    a, b = kh // 2, kw // 2
    h, w, _ = src.shape
    ridx = _reflect_indices(np.arange(-a, h + a), h)
    cidx = _reflect_indices(np.arange(-b, w + b), w)
    padded = src[ridx[:, None], cidx[None, :]]
    kf = kernel[::-1, ::-1]
    out = np.zeros_like(src)
    for u in range(kh):
        for v in range(kw):
            out += kf[u, v] * padded[u:u + h, v:v + w]
    return out


def sep_convolve2d(src: np.ndarray, kx: np.ndarray, ky: np.ndarray) -> np.ndarray:
    """Separable true convolution: kx along columns (x), then ky along rows (y).

    Symmetric border, same semantics as convolve2d with the outer product
    kernel ky (x) kx up to floating-point association.
    """
    h, w, _ = src.shape
    bx = len(kx) // 2
    cidx = _reflect_indices(np.arange(-bx, w + bx), w)
    padded = src[:, cidx]
    kfx = kx[::-1]
    tmp = np.zeros_like(src)
    for v in range(len(kx)):
        tmp += kfx[v] * padded[:, v:v + w]
    by = len(ky) // 2
    ridx = _reflect_indices(np.arange(-by, h + by), h)
    padded = tmp[ridx]
    kfy = ky[::-1]
    out = np.zeros_like(src)
    for u in range(len(ky)):
        out += kfy[u] * padded[u:u + h]
    return out
