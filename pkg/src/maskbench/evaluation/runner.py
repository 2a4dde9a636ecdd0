"""Run a detector over a dataset and score both tasks."""
from __future__ import annotations

from typing import Dict, Sequence, Tuple

from ..errors import EvaluationError
from .ap import APReport, compute_ap
from .types import ground_truths_from_samples


def evaluate_detector(
    model,
    samples: Sequence,
    tasks: Tuple[str, ...] = ("segm", "bbox"),
) -> Dict[str, APReport]:
    """Inference + COCO-style scoring; returns one APReport per task."""
    if not samples:
        raise EvaluationError("cannot evaluate on an empty dataset")
    predictions = []
    for sample in samples:
        predictions.extend(model.predict(sample))
    ground_truths = ground_truths_from_samples(samples)
    eval_cfg = model.config.eval
    return {
        task: compute_ap(
            predictions,
            ground_truths,
            task=task,
            small_max_area=eval_cfg.small_max_area,
            medium_max_area=eval_cfg.medium_max_area,
        )
        for task in tasks
    }
