"""Differentiable RoIAlign over a single feature map.

Boxes are mapped into feature coordinates by dividing by the stride with no
rounding. Each output cell averages sampling_ratio**2 bilinear samples taken
at regularly spaced points inside the cell; sample coordinates use the
half-pixel convention (pixel i covers [i, i+1) with its center at i + 0.5)
and clamp to the map border.
"""
from __future__ import annotations

from typing import Tuple, Union

import torch

from ..errors import AlignmentError


def roi_align(
    feature_map: torch.Tensor,
    boxes,
    output_size: Union[int, Tuple[int, int]],
    stride: int = 1,
    sampling_ratio: int = 2,
) -> torch.Tensor:
    """Extract [N, C, oh, ow] aligned features for N image-coordinate boxes."""
    if feature_map.dim() != 3:
        raise AlignmentError(
            "feature map must be [C, h, w], got %s" % (tuple(feature_map.shape),)
        )
    if isinstance(output_size, int):
        oh = ow = int(output_size)
    else:
        oh, ow = (int(v) for v in output_size)
    if oh < 1 or ow < 1:
        raise AlignmentError("output size must be positive, got (%d, %d)" % (oh, ow))
    if sampling_ratio < 1:
        raise AlignmentError("sampling_ratio must be >= 1, got %d" % sampling_ratio)

    c, h, w = feature_map.shape
    dtype = feature_map.dtype
    device = feature_map.device
    if not torch.is_tensor(boxes):
        boxes = torch.as_tensor(boxes, dtype=dtype, device=device)
    boxes = boxes.to(dtype=dtype, device=device).reshape(-1, 4)
    n = boxes.shape[0]
    if n == 0:
        return feature_map.new_zeros((0, c, oh, ow))
    if not bool(torch.isfinite(boxes).all()):
        raise AlignmentError("boxes contain non-finite values")
    if bool((boxes[:, 2] <= boxes[:, 0]).any()) or bool(
        (boxes[:, 3] <= boxes[:, 1]).any()
    ):
        raise AlignmentError("boxes must satisfy x2 > x1 and y2 > y1")

    fb = boxes / float(stride)
    x1, y1, x2, y2 = fb.unbind(dim=1)
    bin_w = (x2 - x1) / ow
    bin_h = (y2 - y1) / oh

    s = int(sampling_ratio)
    offsets = (torch.arange(s, dtype=dtype, device=device) + 0.5) / s
    col_bins = torch.arange(ow, dtype=dtype, device=device).repeat_interleave(s)
    row_bins = torch.arange(oh, dtype=dtype, device=device).repeat_interleave(s)
    col_pos = col_bins + offsets.repeat(ow)  # [ow*s] positions in bin units
    row_pos = row_bins + offsets.repeat(oh)

    gx = x1[:, None] + bin_w[:, None] * col_pos[None, :]  # [n, ow*s]
    gy = y1[:, None] + bin_h[:, None] * row_pos[None, :]  # [n, oh*s]

    u = (gx - 0.5).clamp(0.0, w - 1.0)
    v = (gy - 0.5).clamp(0.0, h - 1.0)
    u0 = u.floor()
    v0 = v.floor()
    fu = u - u0
    fv = v - v0
    u0l = u0.long().clamp(0, w - 1)
    v0l = v0.long().clamp(0, h - 1)
    u1l = (u0l + 1).clamp(max=w - 1)
    v1l = (v0l + 1).clamp(max=h - 1)

    a_rows = oh * s
    a_cols = ow * s
    iy0 = v0l[:, :, None].expand(n, a_rows, a_cols)
    iy1 = v1l[:, :, None].expand(n, a_rows, a_cols)
    ix0 = u0l[:, None, :].expand(n, a_rows, a_cols)
    ix1 = u1l[:, None, :].expand(n, a_rows, a_cols)
    wy1 = fv[:, :, None]
    wy0 = 1.0 - wy1
    wx1 = fu[:, None, :]
    wx0 = 1.0 - wx1

    # gathered values are [c, n, a_rows, a_cols]; weights broadcast over c
    vals = (
        feature_map[:, iy0, ix0] * (wy0 * wx0)
        + feature_map[:, iy0, ix1] * (wy0 * wx1)
        + feature_map[:, iy1, ix0] * (wy1 * wx0)
        + feature_map[:, iy1, ix1] * (wy1 * wx1)
    )
    vals = vals.reshape(c, n, oh, s, ow, s).mean(dim=(3, 5))
    return vals.permute(1, 0, 2, 3).contiguous()
