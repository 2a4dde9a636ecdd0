"""Greedy score-ordered matching between predictions and ground truth.

Matching runs independently per (image, category, IoU threshold). Each
prediction, visited in stable descending score order, claims the unmatched
non-crowd ground truth with the highest overlap at or above the threshold
(first index wins ties). Predictions that fail but overlap a crowd region
by at least the threshold (intersection over prediction area) are absorbed:
neither true nor false positives.
"""
from __future__ import annotations

import numpy as np

MATCH_NONE = -1
MATCH_ABSORBED = -2


def match_group(
    iou: np.ndarray,
    crowd_overlap: np.ndarray,
    scores: np.ndarray,
    gt_iscrowd: np.ndarray,
    thresholds,
) -> np.ndarray:
    """Match one (image, category) group at every threshold.

    ``iou`` and ``crowd_overlap`` are (n_pred, n_gt) matrices over the same
    ground-truth ordering; ``gt_iscrowd`` marks which columns are crowd
    regions. Returns an int array of shape (len(thresholds), n_pred) whose
    entries are the matched gt column, MATCH_NONE for a false positive, or
    MATCH_ABSORBED for a crowd-absorbed prediction.
    """
    n_pred, n_gt = iou.shape
    scores = np.asarray(scores, dtype=np.float64)
    gt_iscrowd = np.asarray(gt_iscrowd, dtype=bool)
    order = np.argsort(-scores, kind="stable")
    out = np.full((len(thresholds), n_pred), MATCH_NONE, dtype=np.int64)
    noncrowd = ~gt_iscrowd
    for t_idx, threshold in enumerate(thresholds):
        taken = np.zeros(n_gt, dtype=bool)
        for i in order:
            if n_gt:
                eligible = noncrowd & ~taken
                row = np.where(eligible, iou[i], -1.0)
                best_j = int(np.argmax(row))
                if row[best_j] >= threshold:
                    taken[best_j] = True
                    out[t_idx, i] = best_j
                    continue
                if np.any(gt_iscrowd & (crowd_overlap[i] >= threshold)):
                    out[t_idx, i] = MATCH_ABSORBED
    return out
