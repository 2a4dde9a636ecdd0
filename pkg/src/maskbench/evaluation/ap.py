"""COCO-style average precision over masks or boxes.

The headline number averages 101-point interpolated precision over the IoU
thresholds 0.50:0.05:0.95, first across categories (skipping categories
with no ground truth in the size bucket), then across thresholds. Size
buckets restrict ground truth only: a prediction matched to an out-of-bucket
instance is dropped from the sweep, while unmatched predictions always stay
false positives. A bucket with no eligible category reports -1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import EvaluationError
from .iou import (
    box_crowd_overlap_matrix,
    box_iou_matrix,
    mask_crowd_overlap_matrix,
    mask_iou_matrix,
)
from .matching import MATCH_ABSORBED, MATCH_NONE, match_group
from .types import GroundTruth, Prediction

DEFAULT_IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
RECALL_GRID = tuple(step / 100.0 for step in range(101))

BUCKET_NAMES = ("all", "s", "m", "l")


@dataclass
class APReport:
    """Summary metrics for one task, in paper column order."""

    task: str
    ap: float
    ap50: float
    ap75: float
    ap_s: float
    ap_m: float
    ap_l: float
    num_predictions: int = 0
    num_ground_truths: int = 0
    per_category: Dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "ap": self.ap,
            "ap50": self.ap50,
            "ap75": self.ap75,
            "ap_s": self.ap_s,
            "ap_m": self.ap_m,
            "ap_l": self.ap_l,
            "num_predictions": self.num_predictions,
            "num_ground_truths": self.num_ground_truths,
            "per_category": {str(k): v for k, v in self.per_category.items()},
        }


class _CategoryResult:
    """Matching outcome for one category, pooled over images."""

    def __init__(self, n_pred: int, n_thresholds: int):
        self.scores = np.zeros(n_pred, dtype=np.float64)
        # matched gt index into the category-wide gt list, or sentinel
        self.matched = np.full((n_thresholds, n_pred), MATCH_NONE, dtype=np.int64)
        self.gt_in_bucket: Dict[str, np.ndarray] = {}
        self.gt_iscrowd = np.zeros(0, dtype=bool)


def _gt_area(gt: GroundTruth, task: str) -> float:
    if task == "segm":
        if gt.mask is None:
            raise EvaluationError(
                "ground truth for image %d lacks a mask for segm evaluation"
                % gt.image_id
            )
        return float(gt.mask.area())
    x1, y1, x2, y2 = gt.box
    return float((x2 - x1) * (y2 - y1))


def _overlap_matrices(preds, gts, task):
    if task == "segm":
        for p in preds:
            if p.mask is None:
                raise EvaluationError(
                    "prediction for image %d lacks a mask for segm evaluation"
                    % p.image_id
                )
        pred_masks = [p.mask for p in preds]
        gt_masks = [g.mask for g in gts]
        return (
            mask_iou_matrix(pred_masks, gt_masks),
            mask_crowd_overlap_matrix(pred_masks, gt_masks),
        )
    pred_boxes = np.stack([p.box for p in preds]) if preds else np.zeros((0, 4))
    gt_boxes = np.stack([g.box for g in gts]) if gts else np.zeros((0, 4))
    return (
        box_iou_matrix(pred_boxes, gt_boxes),
        box_crowd_overlap_matrix(pred_boxes, gt_boxes),
    )


def _match_category(preds, gts, task, thresholds, small_max, medium_max):
    """Run per-image matching for one category and pool the outcome.

    ``preds``/``gts`` keep their original list order so that pooled score
    ties resolve by input position.
    """
    result = _CategoryResult(len(preds), len(thresholds))
    result.scores = np.array([p.score for p in preds], dtype=np.float64)
    areas = np.array([_gt_area(g, task) for g in gts], dtype=np.float64)
    result.gt_iscrowd = np.array([g.iscrowd for g in gts], dtype=bool)
    result.gt_in_bucket = {
        "all": np.ones(len(gts), dtype=bool),
        "s": areas < small_max,
        "m": (areas >= small_max) & (areas <= medium_max),
        "l": areas > medium_max,
    }

    image_ids = sorted(
        {p.image_id for p in preds} | {g.image_id for g in gts}
    )
    for image_id in image_ids:
        p_idx = [i for i, p in enumerate(preds) if p.image_id == image_id]
        g_idx = [j for j, g in enumerate(gts) if g.image_id == image_id]
        if not p_idx:
            continue
        img_preds = [preds[i] for i in p_idx]
        img_gts = [gts[j] for j in g_idx]
        iou, crowd = _overlap_matrices(img_preds, img_gts, task)
        matched = match_group(
            iou,
            crowd,
            np.array([p.score for p in img_preds], dtype=np.float64),
            np.array([g.iscrowd for g in img_gts], dtype=bool),
            thresholds,
        )
        g_idx_arr = np.asarray(g_idx, dtype=np.int64)
        for t in range(len(thresholds)):
            for local_i, global_i in enumerate(p_idx):
                m = matched[t, local_i]
                if m >= 0:
                    result.matched[t, global_i] = g_idx_arr[m]
                else:
                    result.matched[t, global_i] = m
    return result


def _ap_from_flags(matched_row, order, in_bucket, iscrowd, n_gt):
    """101-point interpolated AP from pooled matching flags.

    ``matched_row`` holds per-prediction matched gt indices (or sentinels)
    in input order; ``order`` is the pooled descending-score ordering.
    """
    tp_flags: List[bool] = []
    for i in order:
        m = matched_row[i]
        if m == MATCH_ABSORBED:
            continue
        if m >= 0:
            if not in_bucket[m] or iscrowd[m]:
                continue
            tp_flags.append(True)
        else:
            tp_flags.append(False)
    if not tp_flags:
        return 0.0
    flags = np.asarray(tp_flags, dtype=np.float64)
    tp_cum = np.cumsum(flags)
    count = np.arange(1, flags.size + 1, dtype=np.float64)
    recall = tp_cum / n_gt
    precision = tp_cum / count
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    total = 0.0
    for r in RECALL_GRID:
        idx = int(np.searchsorted(recall, r, side="left"))
        if idx < recall.size:
            total += float(envelope[idx])
    return total / 101.0


def compute_ap(
    predictions: Sequence[Prediction],
    ground_truths: Sequence[GroundTruth],
    task: str = "segm",
    iou_thresholds: Sequence[float] = DEFAULT_IOU_THRESHOLDS,
    small_max_area: float = 32.0**2,
    medium_max_area: float = 96.0**2,
) -> APReport:
    """Evaluate pooled predictions against pooled ground truth.

    Both sequences span the whole dataset; records carry their image id.
    """
    if task not in ("segm", "bbox"):
        raise EvaluationError("unknown evaluation task %r" % (task,))
    thresholds = tuple(iou_thresholds)
    if not thresholds:
        raise EvaluationError("at least one IoU threshold is required")

    categories = sorted({g.category_id for g in ground_truths})
    per_cat_results = {}
    for c in categories:
        cat_preds = [p for p in predictions if p.category_id == c]
        cat_gts = [g for g in ground_truths if g.category_id == c]
        per_cat_results[c] = (
            _match_category(
                cat_preds, cat_gts, task, thresholds, small_max_area, medium_max_area
            ),
            cat_preds,
            cat_gts,
        )

    def bucket_metric(threshold_indices, bucket):
        per_threshold = []
        for t in threshold_indices:
            vals = []
            for c in categories:
                result, _, _ = per_cat_results[c]
                in_bucket = result.gt_in_bucket[bucket]
                n_gt = int(np.sum(in_bucket & ~result.gt_iscrowd))
                if n_gt == 0:
                    continue
                order = np.argsort(-result.scores, kind="stable")
                vals.append(
                    _ap_from_flags(
                        result.matched[t],
                        order,
                        in_bucket,
                        result.gt_iscrowd,
                        n_gt,
                    )
                )
            if not vals:
                return -1.0
            per_threshold.append(sum(vals) / len(vals))
        return sum(per_threshold) / len(per_threshold)

    all_t = list(range(len(thresholds)))
    idx50 = [i for i, t in enumerate(thresholds) if abs(t - 0.5) < 1e-9]
    idx75 = [i for i, t in enumerate(thresholds) if abs(t - 0.75) < 1e-9]

    per_category = {}
    for c in categories:
        result, _, _ = per_cat_results[c]
        in_bucket = result.gt_in_bucket["all"]
        n_gt = int(np.sum(in_bucket & ~result.gt_iscrowd))
        if n_gt == 0:
            continue
        order = np.argsort(-result.scores, kind="stable")
        vals = [
            _ap_from_flags(result.matched[t], order, in_bucket, result.gt_iscrowd, n_gt)
            for t in all_t
        ]
        per_category[c] = sum(vals) / len(vals)

    return APReport(
        task=task,
        ap=bucket_metric(all_t, "all"),
        ap50=bucket_metric(idx50, "all") if idx50 else -1.0,
        ap75=bucket_metric(idx75, "all") if idx75 else -1.0,
        ap_s=bucket_metric(all_t, "s"),
        ap_m=bucket_metric(all_t, "m"),
        ap_l=bucket_metric(all_t, "l"),
        num_predictions=len(predictions),
        num_ground_truths=len(ground_truths),
        per_category=per_category,
    )
