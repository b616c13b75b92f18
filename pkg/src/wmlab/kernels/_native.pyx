# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Mirrors wmlab.kernels.pure element for element, including floating-point
accumulation order (built with -ffp-contract=off), so results agree bit for
bit with the fallback. See pure.py for the semantics documentation.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

NAME = "native"


cdef inline Py_ssize_t _clampi(Py_ssize_t i, Py_ssize_t hi) nogil:
    if i < 0:
        return 0
    if i > hi:
        return hi
    return i


cdef inline Py_ssize_t _reflecti(Py_ssize_t i, Py_ssize_t n) nogil:
    cdef Py_ssize_t period = 2 * n
    cdef Py_ssize_t m = i % period
    if m < 0:
        m += period
    if m >= n:
        m = period - 1 - m
    return m


def bilinear_warp(src, dx, dy, bint fill_zero=False):
    src = np.ascontiguousarray(src, dtype=np.float64)
    dx = np.ascontiguousarray(dx, dtype=np.float64)
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    cdef double[:, :, ::1] s = src
    cdef double[:, ::1] dxv = dx
    cdef double[:, ::1] dyv = dy
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], c = s.shape[2]
    out_arr = np.empty((h, w, c), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t r, cc, ch, y0, x0, y0c, y1c, x0c, x1c
    cdef double y, x, fy, fx, w00, w01, w10, w11, acc
    with nogil:
        for r in range(h):
            for cc in range(w):
                y = r + dyv[r, cc]
                x = cc + dxv[r, cc]
                if fill_zero and (x < 0.0 or x > w - 1.0 or y < 0.0 or y > h - 1.0):
                    for ch in range(c):
                        out[r, cc, ch] = 0.0
                    continue
                y0 = <Py_ssize_t> floor(y)
                x0 = <Py_ssize_t> floor(x)
                fy = y - floor(y)
                fx = x - floor(x)
                y0c = _clampi(y0, h - 1)
                y1c = _clampi(y0 + 1, h - 1)
                x0c = _clampi(x0, w - 1)
                x1c = _clampi(x0 + 1, w - 1)
                w00 = (1.0 - fy) * (1.0 - fx)
                w01 = (1.0 - fy) * fx
                w10 = fy * (1.0 - fx)
                w11 = fy * fx
                for ch in range(c):
                    acc = s[y0c, x0c, ch] * w00
                    acc = acc + s[y0c, x1c, ch] * w01
                    acc = acc + s[y1c, x0c, ch] * w10
                    acc = acc + s[y1c, x1c, ch] * w11
                    out[r, cc, ch] = acc
    return out_arr


cdef void _cubic_taps(Py_ssize_t n_in, Py_ssize_t n_out,
                      Py_ssize_t[:, ::1] idx, double[:, ::1] wgt) nogil:
    cdef Py_ssize_t o, base
    cdef double scale = (<double> n_in) / (<double> n_out)
    cdef double src, t
    for o in range(n_out):
        src = (o + 0.5) * scale - 0.5
        base = <Py_ssize_t> floor(src)
        t = src - floor(src)
        idx[0, o] = _clampi(base - 1, n_in - 1)
        idx[1, o] = _clampi(base, n_in - 1)
        idx[2, o] = _clampi(base + 1, n_in - 1)
        idx[3, o] = _clampi(base + 2, n_in - 1)
        wgt[0, o] = ((-0.5 * t + 1.0) * t - 0.5) * t
        wgt[1, o] = (1.5 * t - 2.5) * t * t + 1.0
        wgt[2, o] = ((-1.5 * t + 2.0) * t + 0.5) * t
        wgt[3, o] = (0.5 * t - 0.5) * t * t


def bicubic_resize(src, Py_ssize_t out_h, Py_ssize_t out_w):
    src = np.ascontiguousarray(src, dtype=np.float64)
    cdef double[:, :, ::1] s = src
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], c = s.shape[2]
    ridx_arr = np.empty((4, out_h), dtype=np.intp)
    rwgt_arr = np.empty((4, out_h), dtype=np.float64)
    cidx_arr = np.empty((4, out_w), dtype=np.intp)
    cwgt_arr = np.empty((4, out_w), dtype=np.float64)
    cdef Py_ssize_t[:, ::1] ridx = ridx_arr
    cdef double[:, ::1] rwgt = rwgt_arr
    cdef Py_ssize_t[:, ::1] cidx = cidx_arr
    cdef double[:, ::1] cwgt = cwgt_arr
    tmp_arr = np.empty((out_h, w, c), dtype=np.float64)
    out_arr = np.empty((out_h, out_w, c), dtype=np.float64)
    cdef double[:, :, ::1] tmp = tmp_arr
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t r, cc, ch
    cdef double acc
    with nogil:
        _cubic_taps(h, out_h, ridx, rwgt)
        _cubic_taps(w, out_w, cidx, cwgt)
        for r in range(out_h):
            for cc in range(w):
                for ch in range(c):
                    acc = s[ridx[0, r], cc, ch] * rwgt[0, r]
                    acc = acc + s[ridx[1, r], cc, ch] * rwgt[1, r]
                    acc = acc + s[ridx[2, r], cc, ch] * rwgt[2, r]
                    acc = acc + s[ridx[3, r], cc, ch] * rwgt[3, r]
                    tmp[r, cc, ch] = acc
        for r in range(out_h):
            for cc in range(out_w):
                for ch in range(c):
                    acc = tmp[r, cidx[0, cc], ch] * cwgt[0, cc]
                    acc = acc + tmp[r, cidx[1, cc], ch] * cwgt[1, cc]
                    acc = acc + tmp[r, cidx[2, cc], ch] * cwgt[2, cc]
                    acc = acc + tmp[r, cidx[3, cc], ch] * cwgt[3, cc]
                    out[r, cc, ch] = acc
    return out_arr


def grid_median(src, row_sel, col_sel, bint use_max=False):
    src = np.ascontiguousarray(src, dtype=np.float64)
    row_sel = np.ascontiguousarray(row_sel, dtype=np.uint8)
    col_sel = np.ascontiguousarray(col_sel, dtype=np.uint8)
    cdef double[:, :, ::1] s = src
    cdef cnp.uint8_t[::1] rs = row_sel
    cdef cnp.uint8_t[::1] cs = col_sel
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], c = s.shape[2]
    out_arr = src.copy()
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t r, cc, ch, dr, dc, k, i, j
    cdef bint interior
    cdef double[9] win
    cdef double key
    with nogil:
        for r in range(h):
            for cc in range(w):
                if rs[r] == 0 and cs[cc] == 0:
                    continue
                interior = 0 < r < h - 1 and 0 < cc < w - 1
                for ch in range(c):
                    if interior:
                        k = 0
                        for dr in range(-1, 2):
                            for dc in range(-1, 2):
                                win[k] = s[r + dr, cc + dc, ch]
                                k += 1
                    else:
                        k = 0
                        for dr in range(-1, 2):
                            for dc in range(-1, 2):
                                win[k] = s[_clampi(r + dr, h - 1), _clampi(cc + dc, w - 1), ch]
                                k += 1
                    # insertion sort, 9 elements
                    for i in range(1, 9):
                        key = win[i]
                        j = i - 1
                        while j >= 0 and win[j] > key:
                            win[j + 1] = win[j]
                            j -= 1
                        win[j + 1] = key
                    out[r, cc, ch] = win[8] if use_max else win[4]
    return out_arr


def convolve2d(src, kernel):
    src = np.ascontiguousarray(src, dtype=np.float64)
    kf = np.ascontiguousarray(kernel[::-1, ::-1], dtype=np.float64)
    cdef double[:, :, ::1] s = src
    cdef double[:, ::1] k = kf
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], c = s.shape[2]
    cdef Py_ssize_t kh = k.shape[0], kw = k.shape[1]
    cdef Py_ssize_t a = kh // 2, b = kw // 2
    ridx_arr = np.empty(h + kh - 1, dtype=np.intp)
    cidx_arr = np.empty(w + kw - 1, dtype=np.intp)
    cdef Py_ssize_t[::1] ridx = ridx_arr
    cdef Py_ssize_t[::1] cidx = cidx_arr
    out_arr = np.zeros((h, w, c), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t r, cc, ch, u, v
    cdef double acc
    with nogil:
        for r in range(h + kh - 1):
            ridx[r] = _reflecti(r - a, h)
        for cc in range(w + kw - 1):
            cidx[cc] = _reflecti(cc - b, w)
        for r in range(h):
            for cc in range(w):
                for ch in range(c):
                    acc = 0.0
                    for u in range(kh):
                        for v in range(kw):
                            acc = acc + k[u, v] * s[ridx[r + u], cidx[cc + v], ch]
                    out[r, cc, ch] = acc
    return out_arr


def sep_convolve2d(src, kx, ky):
    src = np.ascontiguousarray(src, dtype=np.float64)
    kfx = np.ascontiguousarray(kx[::-1], dtype=np.float64)
    kfy = np.ascontiguousarray(ky[::-1], dtype=np.float64)
    cdef double[:, :, ::1] s = src
    cdef double[::1] fx = kfx
    cdef double[::1] fy = kfy
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1], c = s.shape[2]
    cdef Py_ssize_t nx = fx.shape[0], ny = fy.shape[0]
    cdef Py_ssize_t bx = nx // 2, by = ny // 2
    cidx_arr = np.empty(w + nx - 1, dtype=np.intp)
    ridx_arr = np.empty(h + ny - 1, dtype=np.intp)
    cdef Py_ssize_t[::1] cidx = cidx_arr
    cdef Py_ssize_t[::1] ridx = ridx_arr
    tmp_arr = np.zeros((h, w, c), dtype=np.float64)
    out_arr = np.zeros((h, w, c), dtype=np.float64)
    cdef double[:, :, ::1] tmp = tmp_arr
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t r, cc, ch, u, v
    cdef double acc
    with nogil:
        for cc in range(w + nx - 1):
            cidx[cc] = _reflecti(cc - bx, w)
        for r in range(h + ny - 1):
            ridx[r] = _reflecti(r - by, h)
        for r in range(h):
            for cc in range(w):
                if bx <= cc <= w - nx + bx:
                    # interior: contiguous taps, no reflection lookup
                    for ch in range(c):
                        acc = 0.0
                        for v in range(nx):
                            acc = acc + fx[v] * s[r, cc - bx + v, ch]
                        tmp[r, cc, ch] = acc
                else:
                    for ch in range(c):
                        acc = 0.0
                        for v in range(nx):
                            acc = acc + fx[v] * s[r, cidx[cc + v], ch]
                        tmp[r, cc, ch] = acc
        for r in range(h):
            if by <= r <= h - ny + by:
                for cc in range(w):
                    for ch in range(c):
                        acc = 0.0
                        for u in range(ny):
                            acc = acc + fy[u] * tmp[r - by + u, cc, ch]
                        out[r, cc, ch] = acc
            else:
                for cc in range(w):
                    for ch in range(c):
                        acc = 0.0
                        for u in range(ny):
                            acc = acc + fy[u] * tmp[ridx[r + u], cc, ch]
                        out[r, cc, ch] = acc
    return out_arr
