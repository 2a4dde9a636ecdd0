"""Detection postprocessing: score filtering, per-class NMS, top-k."""
from __future__ import annotations

from typing import Optional

import numpy as np


def nms(boxes: np.ndarray, scores: np.ndarray, threshold: float) -> np.ndarray:
    """Greedy non-maximum suppression on (x1, y1, x2, y2) boxes.

    Returns kept indices in descending score order (input order on ties).
    A candidate is suppressed when its IoU with an already kept box is
    strictly above the threshold.
    """
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    order = np.argsort(-scores, kind="stable")
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    kept = []
    for i in order:
        suppressed = False
        for j in kept:
            iw = min(boxes[i, 2], boxes[j, 2]) - max(boxes[i, 0], boxes[j, 0])
            ih = min(boxes[i, 3], boxes[j, 3]) - max(boxes[i, 1], boxes[j, 1])
            if iw <= 0 or ih <= 0:
                continue
            inter = iw * ih
            union = areas[i] + areas[j] - inter
            if union > 0 and inter / union > threshold:
                suppressed = True
                break
        if not suppressed:
            kept.append(int(i))
    return np.asarray(kept, dtype=np.int64)


def postprocess_detections(
    boxes: np.ndarray,
    scores: np.ndarray,
    labels: np.ndarray,
    score_threshold: float,
    nms_threshold: float,
    max_detections: int,
) -> np.ndarray:
    """Indices of detections surviving filtering, class-wise NMS and top-k.

    ``labels`` are category ids; NMS never suppresses across categories.
    The returned order is descending score (stable on ties).
    """
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)

    keep_mask = scores >= score_threshold
    candidates = np.nonzero(keep_mask)[0]
    survivors = []
    for cls in np.unique(labels[candidates]):
        cls_idx = candidates[labels[candidates] == cls]
        kept = nms(boxes[cls_idx], scores[cls_idx], nms_threshold)
        survivors.extend(int(cls_idx[k]) for k in kept)
    if not survivors:
        return np.zeros(0, dtype=np.int64)
    survivors = np.asarray(sorted(survivors), dtype=np.int64)
    order = np.argsort(-scores[survivors], kind="stable")
    survivors = survivors[order]
    return survivors[:max_detections]
