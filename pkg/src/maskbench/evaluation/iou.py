"""Overlap matrices between prediction and ground-truth groups.

Boxes use plain interval arithmetic; masks go through the kernel backend.
Crowd regions use intersection over prediction area so that a detection
fully inside a large crowd is absorbed regardless of the crowd's extent.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import kernels


def box_iou_matrix(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """Pairwise IoU for (x1, y1, x2, y2) boxes, shape (len_a, len_b)."""
    a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    out = np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    for i in range(a.shape[0]):
        ax1, ay1, ax2, ay2 = a[i]
        for j in range(b.shape[0]):
            bx1, by1, bx2, by2 = b[j]
            iw = min(ax2, bx2) - max(ax1, bx1)
            ih = min(ay2, by2) - max(ay1, by1)
            if iw <= 0 or ih <= 0:
                continue
            inter = iw * ih
            union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
            if union > 0:
                out[i, j] = inter / union
    return out


def box_crowd_overlap_matrix(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """Intersection area over box-a area, shape (len_a, len_b)."""
    a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    out = np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    for i in range(a.shape[0]):
        ax1, ay1, ax2, ay2 = a[i]
        area = (ax2 - ax1) * (ay2 - ay1)
        if area <= 0:
            continue
        for j in range(b.shape[0]):
            bx1, by1, bx2, by2 = b[j]
            iw = min(ax2, bx2) - max(ax1, bx1)
            ih = min(ay2, by2) - max(ay1, by1)
            if iw <= 0 or ih <= 0:
                continue
            out[i, j] = iw * ih / area
    return out


def mask_iou_matrix(masks_a: Sequence, masks_b: Sequence) -> np.ndarray:
    """Pairwise mask IoU; inputs are sequences of BinaryMask."""
    if not masks_a or not masks_b:
        return np.zeros((len(masks_a), len(masks_b)), dtype=np.float64)
    stack_a = np.stack([m.to_bitmap() for m in masks_a]).astype(np.uint8)
    stack_b = np.stack([m.to_bitmap() for m in masks_b]).astype(np.uint8)
    return kernels.mask_iou_matrix(stack_a, stack_b)


def mask_crowd_overlap_matrix(masks_a: Sequence, masks_b: Sequence) -> np.ndarray:
    """Pairwise intersection over mask-a pixel count."""
    if not masks_a or not masks_b:
        return np.zeros((len(masks_a), len(masks_b)), dtype=np.float64)
    stack_a = np.stack([m.to_bitmap() for m in masks_a]).astype(np.uint8)
    stack_b = np.stack([m.to_bitmap() for m in masks_b]).astype(np.uint8)
    return kernels.mask_intersection_over_area(stack_a, stack_b)
