"""Two-stage detector scaffold: backbone, proposals, alignment, heads."""
from .backbone import PYRAMID_STRIDES, FeaturePyramid, PyramidBackbone
from .detector import DetectionResult, Detector
from .heads import (
    BaselineMaskHead,
    DetectionHead,
    decode_boxes,
    encode_boxes,
    paste_mask,
)
from .proposals import (
    ProposalHead,
    RoiBatch,
    assign_pyramid_level,
    assign_pyramid_levels,
    jitter_boxes,
    propose,
    sample_rois,
)
from .roi_align import roi_align

__all__ = [
    "BaselineMaskHead",
    "DetectionHead",
    "DetectionResult",
    "Detector",
    "FeaturePyramid",
    "PYRAMID_STRIDES",
    "ProposalHead",
    "PyramidBackbone",
    "RoiBatch",
    "assign_pyramid_level",
    "assign_pyramid_levels",
    "decode_boxes",
    "encode_boxes",
    "jitter_boxes",
    "paste_mask",
    "propose",
    "roi_align",
    "sample_rois",
]
