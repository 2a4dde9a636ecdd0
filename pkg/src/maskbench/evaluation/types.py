"""Prediction and ground-truth records used by the evaluator."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..data.types import BinaryMask, ImageSample


@dataclass
class Prediction:
    """One detected instance in full-image coordinates.

    ``box`` is (x1, y1, x2, y2). ``mask`` may be None for box-only
    evaluation.
    """

    image_id: int
    category_id: int
    score: float
    box: np.ndarray
    mask: Optional[BinaryMask] = None

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=np.float64).reshape(4)


@dataclass
class GroundTruth:
    image_id: int
    category_id: int
    box: np.ndarray
    mask: Optional[BinaryMask] = None
    iscrowd: bool = False

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=np.float64).reshape(4)


def ground_truths_from_samples(samples: Sequence[ImageSample]) -> list:
    """Flatten dataset samples into evaluator ground-truth records."""
    records = []
    for sample in samples:
        for ann in sample.annotations:
            records.append(
                GroundTruth(
                    image_id=sample.image_id,
                    category_id=ann.category_id,
                    box=np.asarray(ann.bbox_xyxy, dtype=np.float64),
                    mask=ann.mask,
                    iscrowd=bool(ann.iscrowd),
                )
            )
    return records
