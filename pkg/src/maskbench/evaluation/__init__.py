"""COCO-style evaluation: matching, average precision, reports."""
from .ap import APReport, DEFAULT_IOU_THRESHOLDS, compute_ap
from .iou import (
    box_crowd_overlap_matrix,
    box_iou_matrix,
    mask_crowd_overlap_matrix,
    mask_iou_matrix,
)
from .matching import MATCH_ABSORBED, MATCH_NONE, match_group
from .postprocess import nms, postprocess_detections
from .report import (
    format_report_table,
    load_predictions,
    predictions_from_coco,
    predictions_to_coco,
    report_to_json,
    save_predictions,
)
from .types import GroundTruth, Prediction, ground_truths_from_samples

__all__ = [
    "APReport",
    "DEFAULT_IOU_THRESHOLDS",
    "GroundTruth",
    "MATCH_ABSORBED",
    "MATCH_NONE",
    "Prediction",
    "box_crowd_overlap_matrix",
    "box_iou_matrix",
    "compute_ap",
    "format_report_table",
    "ground_truths_from_samples",
    "load_predictions",
    "mask_crowd_overlap_matrix",
    "mask_iou_matrix",
    "match_group",
    "nms",
    "postprocess_detections",
    "predictions_from_coco",
    "predictions_to_coco",
    "report_to_json",
    "save_predictions",
]
