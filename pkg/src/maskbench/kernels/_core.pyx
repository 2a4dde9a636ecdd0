# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled mask/codec kernels.

Mirrors ``fallback.py`` exactly; compiled with -ffp-contract=off so the
bilinear arithmetic matches the numpy fallback bit for bit.
"""
import numpy as np

cimport numpy as cnp

from ..errors import CodecError

cnp.import_array()

BACKEND_NAME = "compiled"


def rle_encode(mask):
    cdef cnp.ndarray arr = np.ascontiguousarray(mask)
    if arr.ndim != 2:
        raise CodecError(f"expected a 2-D mask, got shape {mask.shape}")
    cdef cnp.uint8_t[:, ::1] m = (arr != 0).astype(np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] buf = np.empty(h * w + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] out = buf
    cdef Py_ssize_t i, j, n = 0
    cdef cnp.uint8_t cur = 0, v
    cdef cnp.int64_t run = 0
    for j in range(w):
        for i in range(h):
            v = m[i, j]
            if v == cur:
                run += 1
            else:
                out[n] = run
                n += 1
                cur = v
                run = 1
    out[n] = run
    n += 1
    return buf[:n].copy()


def rle_decode(counts, height, width):
    cdef cnp.ndarray carr = np.asarray(counts, dtype=np.int64)
    if carr.ndim != 1:
        raise CodecError("counts must be a flat sequence")
    if np.any(carr < 0):
        raise CodecError("counts must be non-negative")
    cdef Py_ssize_t h = height, w = width
    cdef cnp.int64_t total = carr.sum()
    if total != h * w:
        raise CodecError(
            f"counts sum to {total}, expected {height}x{width}={h * w}"
        )
    cdef cnp.int64_t[::1] c = np.ascontiguousarray(carr)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] buf = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = buf
    cdef Py_ssize_t k, r, pos = 0
    cdef cnp.uint8_t val = 0
    for k in range(c.shape[0]):
        if val:
            for r in range(c[k]):
                out[(pos + r) % h, (pos + r) // h] = 1
        pos += c[k]
        val = 1 - val
    return buf


cdef inline void _count_pair(cnp.uint8_t[:, ::1] a, cnp.uint8_t[:, ::1] b,
                             cnp.int64_t* inter, cnp.int64_t* union_) nogil:
    cdef Py_ssize_t i, j
    cdef cnp.int64_t ni = 0, nu = 0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] and b[i, j]:
                ni += 1
            if a[i, j] or b[i, j]:
                nu += 1
    inter[0] = ni
    union_[0] = nu


def mask_iou_pair(a, b):
    cdef cnp.uint8_t[:, ::1] ma = (np.asarray(a) != 0).astype(np.uint8)
    cdef cnp.uint8_t[:, ::1] mb = (np.asarray(b) != 0).astype(np.uint8)
    cdef cnp.int64_t inter = 0, union_ = 0
    _count_pair(ma, mb, &inter, &union_)
    if union_ == 0:
        return 0.0
    return inter / <double> union_


cdef extern from *:
    """
    static inline long long maskbench_popcountll(unsigned long long x) {
    #if defined(__GNUC__) || defined(__clang__)
        return __builtin_popcountll(x);
    #else
        long long n = 0;
        while (x) { x &= x - 1; n++; }
        return n;
    #endif
    }
    """
    cnp.int64_t maskbench_popcountll(cnp.uint64_t x) nogil


def _pack_masks(masks):
    """Flatten a mask stack to little-endian bit-packed uint64 words.

    Integer popcount arithmetic on the packed rows gives exact
    intersection counts, so the packed path matches the per-pixel one.
    """
    arr = (np.asarray(masks) != 0).reshape(len(masks), -1)
    packed = np.packbits(arr, axis=1, bitorder="little")
    pad = (-packed.shape[1]) % 8
    if pad:
        packed = np.pad(packed, ((0, 0), (0, pad)))
    words = np.ascontiguousarray(packed).view(np.uint64)
    areas = np.count_nonzero(arr, axis=1).astype(np.int64)
    return words, areas


def mask_iou_matrix(masks_a, masks_b):
    words_a, areas_np_a = _pack_masks(masks_a)
    words_b, areas_np_b = _pack_masks(masks_b)
    cdef cnp.uint64_t[:, ::1] a = words_a
    cdef cnp.uint64_t[:, ::1] b = words_b
    cdef cnp.int64_t[::1] areas_a = areas_np_a
    cdef cnp.int64_t[::1] areas_b = areas_np_b
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], nw = a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] buf = np.zeros((n, m), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = buf
    cdef Py_ssize_t p, q, k
    cdef cnp.int64_t inter, union_
    with nogil:
        for p in range(n):
            for q in range(m):
                inter = 0
                for k in range(nw):
                    inter += maskbench_popcountll(a[p, k] & b[q, k])
                union_ = areas_a[p] + areas_b[q] - inter
                if union_ > 0:
                    out[p, q] = inter / <double> union_
    return buf


def mask_intersection_over_area(masks_a, masks_b):
    words_a, areas_np_a = _pack_masks(masks_a)
    words_b, _ = _pack_masks(masks_b)
    cdef cnp.uint64_t[:, ::1] a = words_a
    cdef cnp.uint64_t[:, ::1] b = words_b
    cdef cnp.int64_t[::1] areas_a = areas_np_a
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], nw = a.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] buf = np.zeros((n, m), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = buf
    cdef Py_ssize_t p, q, k
    cdef cnp.int64_t inter
    with nogil:
        for p in range(n):
            if areas_a[p] == 0:
                continue
            for q in range(m):
                inter = 0
                for k in range(nw):
                    inter += maskbench_popcountll(a[p, k] & b[q, k])
                out[p, q] = inter / <double> areas_a[p]
    return buf


def grid_sample_2d(src, ys, xs):
    cdef cnp.float64_t[:, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef cnp.float64_t[::1] yy = np.asarray(ys, dtype=np.float64).copy()
    cdef cnp.float64_t[::1] xx = np.asarray(xs, dtype=np.float64).copy()
    cdef Py_ssize_t h = s.shape[0], w = s.shape[1]
    cdef Py_ssize_t ny = yy.shape[0], nx = xx.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] buf = np.empty((ny, nx), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = buf
    cdef Py_ssize_t i, j, y0, x0, y1, x1
    cdef double y, x, fy, fx, top, bot
    with nogil:
        for i in range(ny):
            y = yy[i]
            if y < 0.0:
                y = 0.0
            if y > h - 1.0:
                y = h - 1.0
            y0 = <Py_ssize_t> y
            fy = y - y0
            y1 = y0 + 1
            if y1 > h - 1:
                y1 = h - 1
            for j in range(nx):
                x = xx[j]
                if x < 0.0:
                    x = 0.0
                if x > w - 1.0:
                    x = w - 1.0
                x0 = <Py_ssize_t> x
                fx = x - x0
                x1 = x0 + 1
                if x1 > w - 1:
                    x1 = w - 1
                top = s[y0, x0] * (1.0 - fx) + s[y0, x1] * fx
                bot = s[y1, x0] * (1.0 - fx) + s[y1, x1] * fx
                out[i, j] = top * (1.0 - fy) + bot * fy
    return buf
