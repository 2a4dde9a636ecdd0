"""Overlay rendering: colored masks, boxes, labels, and scores on images.

Masks are alpha-blended per instance with a palette keyed by instance
index, so pixels outside every mask keep their source values exactly.
Boxes and text are optional extras drawn on top of the blend.
"""
from __future__ import annotations

import os
from typing import Optional, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .data.synth import CATEGORIES

# Distinct saturated colors; cycled when an image has more instances.
PALETTE = (
    (230, 25, 75),
    (60, 180, 75),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
    (210, 245, 60),
)

MASK_ALPHA = 0.45


def to_uint8(image: np.ndarray) -> np.ndarray:
    """Float [0, 1] HWC image to uint8, clipping out-of-range values."""
    return (np.clip(image, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def overlay_predictions(
    image: np.ndarray,
    predictions: Sequence,
    category_names: Optional[dict] = None,
    draw_boxes: bool = True,
    draw_labels: bool = True,
) -> np.ndarray:
    """Blend prediction masks (and optionally boxes/labels) onto an image.

    ``image`` is float [0, 1] HWC; the result is uint8 HWC. With no
    predictions the source pixels come back unchanged.
    """
    if category_names is None:
        category_names = CATEGORIES
    base = to_uint8(image)
    if not predictions:
        return base

    blended = base.astype(np.float64)
    for idx, pred in enumerate(predictions):
        if pred.mask is None:
            continue
        color = np.array(PALETTE[idx % len(PALETTE)], dtype=np.float64)
        inside = pred.mask.to_bitmap().astype(bool)
        blended[inside] = (1.0 - MASK_ALPHA) * blended[inside] + MASK_ALPHA * color

    canvas = Image.fromarray(blended.astype(np.uint8))
    if draw_boxes or draw_labels:
        draw = ImageDraw.Draw(canvas)
        for idx, pred in enumerate(predictions):
            color = PALETTE[idx % len(PALETTE)]
            x1, y1, x2, y2 = [float(v) for v in pred.box]
            if draw_boxes:
                draw.rectangle([x1, y1, x2, y2], outline=color, width=1)
            if draw_labels:
                name = category_names.get(pred.category_id, str(pred.category_id))
                draw.text(
                    (x1 + 1, max(0.0, y1 - 10)),
                    "%s %.2f" % (name, pred.score),
                    fill=color,
                )
    return np.asarray(canvas)


def render_dataset(
    model,
    samples: Sequence,
    out_dir,
    limit: Optional[int] = None,
    draw_boxes: bool = True,
    draw_labels: bool = True,
) -> list:
    """Write one overlay PNG per sample; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    if limit is not None:
        samples = samples[:limit]
    paths = []
    for sample in samples:
        predictions = model.predict(sample)
        rendered = overlay_predictions(
            sample.image,
            predictions,
            draw_boxes=draw_boxes,
            draw_labels=draw_labels,
        )
        path = os.path.join(out_dir, "overlay_%06d.png" % sample.image_id)
        Image.fromarray(rendered).save(path)
        paths.append(path)
    return paths
