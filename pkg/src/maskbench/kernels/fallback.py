"""Pure-numpy kernel implementations.

These are the reference versions of the hot mask/codec kernels. The
compiled core in ``_core.pyx`` mirrors them operation-for-operation and is
expected to produce bit-identical output; the parity tests assert that.
"""
import numpy as np

from ..errors import CodecError

BACKEND_NAME = "python"


def rle_encode(mask):
    """Column-major run-length counts for a dense {0,1} mask.

    The first count is the number of leading zeros (possibly 0); counts
    always sum to H*W.
    """
    mask = np.ascontiguousarray(mask)
    if mask.ndim != 2:
        raise CodecError(f"expected a 2-D mask, got shape {mask.shape}")
    flat = (mask != 0).ravel(order="F")
    n = flat.size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [n]))
    counts = np.diff(bounds).astype(np.int64)
    if flat[0]:
        counts = np.concatenate(([np.int64(0)], counts))
    return counts


def rle_decode(counts, height, width):
    """Inverse of :func:`rle_encode`; raises CodecError on a sum mismatch."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1:
        raise CodecError("counts must be a flat sequence")
    if np.any(counts < 0):
        raise CodecError("counts must be non-negative")
    total = int(height) * int(width)
    if int(counts.sum()) != total:
        raise CodecError(
            f"counts sum to {int(counts.sum())}, expected {height}x{width}={total}"
        )
    values = np.zeros(len(counts), dtype=np.uint8)
    values[1::2] = 1
    flat = np.repeat(values, counts)
    return flat.reshape((height, width), order="F")


def mask_iou_pair(a, b):
    """Intersection-over-union of two same-shape {0,1} masks.

    Defined as 0.0 when both masks are empty.
    """
    a = np.asarray(a) != 0
    b = np.asarray(b) != 0
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 0.0
    return inter / union


def mask_iou_matrix(masks_a, masks_b):
    """Pairwise IoU between two stacks of masks.

    masks_a: [N, H, W], masks_b: [M, H, W] -> [N, M] float64.
    """
    a = (np.asarray(masks_a) != 0).reshape(len(masks_a), -1).astype(np.float64)
    b = (np.asarray(masks_b) != 0).reshape(len(masks_b), -1).astype(np.float64)
    inter = a @ b.T
    areas_a = a.sum(axis=1)[:, None]
    areas_b = b.sum(axis=1)[None, :]
    union = areas_a + areas_b - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def mask_intersection_over_area(masks_a, masks_b):
    """Pairwise |a & b| / |a| between two stacks of masks (crowd overlap).

    Rows with empty ``a`` masks yield 0.
    """
    a = (np.asarray(masks_a) != 0).reshape(len(masks_a), -1).astype(np.float64)
    b = (np.asarray(masks_b) != 0).reshape(len(masks_b), -1).astype(np.float64)
    inter = a @ b.T
    areas_a = a.sum(axis=1)[:, None]
    out = np.zeros_like(inter)
    np.divide(inter, np.broadcast_to(areas_a, inter.shape), out=out, where=areas_a > 0)
    return out


def grid_sample_2d(src, ys, xs):
    """Bilinear samples of ``src`` at the outer-product grid of coordinates.

    Coordinates are in array index space (row r sits at coordinate r) and
    are clamped to the valid range, so out-of-range samples replicate the
    border value. Returns [len(ys), len(xs)] float64.
    """
    src = np.ascontiguousarray(src, dtype=np.float64)
    h, w = src.shape
    ys = np.clip(np.asarray(ys, dtype=np.float64), 0.0, h - 1.0)
    xs = np.clip(np.asarray(xs, dtype=np.float64), 0.0, w - 1.0)
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    fy = ys - y0
    fx = xs - x0
    y0 = y0.astype(np.int64)
    x0 = x0.astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    # Same lerp expression as the compiled core: weighted sums, no FMA.
    a = src[np.ix_(y0, x0)]
    b = src[np.ix_(y0, x1)]
    c = src[np.ix_(y1, x0)]
    d = src[np.ix_(y1, x1)]
    fx = fx[None, :]
    fy = fy[:, None]
    top = a * (1.0 - fx) + b * fx
    bot = c * (1.0 - fx) + d * fx
    return top * (1.0 - fy) + bot * fy
