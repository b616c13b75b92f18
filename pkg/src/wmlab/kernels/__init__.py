"""Kernel backend selection.

The compiled core (built from _native.pyx) is used when importable; otherwise
the pure numpy fallback takes over. Both expose identical functions and agree
bit for bit. Set WMLAB_KERNELS=pure|native to force a backend (forcing an
unavailable one raises at import).
"""
from __future__ import annotations

import os

from . import pure

try:
    from . import _native as native
except ImportError:
    native = None

_requested = os.environ.get("WMLAB_KERNELS", "").strip().lower()
if _requested == "native" and native is None:
    raise ImportError(
        "WMLAB_KERNELS=native but the compiled kernels are not built; "
        "run 'pip install -e . --no-build-isolation'"
    )
if _requested not in ("", "pure", "native"):
    raise ImportError(f"unknown WMLAB_KERNELS value {_requested!r}")

_active = pure if _requested == "pure" else (native if native is not None else pure)


def active_backend() -> str:
    return _active.NAME


def available_backends() -> tuple[str, ...]:
    return ("pure", "native") if native is not None else ("pure",)


def use_backend(name: str) -> None:
    """Switch the active backend at runtime (mainly for tests/benchmarks)."""
    global _active
    if name == "pure":
        _active = pure
    elif name == "native":
        if native is None:
            raise ValueError("compiled kernels are not built")
        _active = native
    else:
        raise ValueError(f"unknown backend {name!r}")


def bilinear_warp(src, dx, dy, fill_zero=False):
    return _active.bilinear_warp(src, dx, dy, fill_zero)


def bicubic_resize(src, out_h, out_w):
    return _active.bicubic_resize(src, out_h, out_w)


def grid_median(src, row_sel, col_sel, use_max=False):
    return _active.grid_median(src, row_sel, col_sel, use_max)


def convolve2d(src, kernel):
    return _active.convolve2d(src, kernel)


def sep_convolve2d(src, kx, ky):
    return _active.sep_convolve2d(src, kx, ky)
