"""Mask target generation: crop-and-resize of ground-truth masks.

Targets at every scale are produced independently from the original
full-resolution mask, never by resizing another target. Sampling uses
half-pixel centers: the value for target cell (i, j) is the bilinear sample
of the {0, 1} bitmap at the cell's center inside the box, thresholded at
0.5 (>= 0.5 counts as foreground).
"""
import numpy as np

from .. import kernels
from ..errors import TargetError


def crop_resize(bitmap, box_xyxy, out_h, out_w):
    """Bilinear crop-and-resize of a 2-D array to [out_h, out_w] floats."""
    x1, y1, x2, y2 = (float(v) for v in box_xyxy)
    if x2 <= x1 or y2 <= y1:
        raise TargetError(f"box must have positive area, got {box_xyxy}")
    cell_h = (y2 - y1) / out_h
    cell_w = (x2 - x1) / out_w
    ys = y1 + (np.arange(out_h, dtype=np.float64) + 0.5) * cell_h - 0.5
    xs = x1 + (np.arange(out_w, dtype=np.float64) + 0.5) * cell_w - 0.5
    return kernels.grid_sample_2d(np.asarray(bitmap, dtype=np.float64), ys, xs)


def make_mask_target(annotation, box_xyxy, side):
    """side x side {0,1} target for an instance mask inside ``box_xyxy``."""
    if side < 1:
        raise TargetError(f"target side must be >= 1, got {side}")
    values = crop_resize(annotation.mask.to_bitmap(), box_xyxy, side, side)
    return (values >= 0.5).astype(np.uint8)
