"""Dataset generation, COCO ingestion, and the RLE mask codec."""
import os

from .coco import load_coco_annotations
from .synth import (
    CATEGORIES,
    dataset_digest,
    generate_shapes_dataset,
    rasterize_polygon,
    save_dataset,
)
from .targets import crop_resize, make_mask_target
from .types import BinaryMask, ImageSample, InstanceAnnotation, rle_decode, rle_encode, tight_bbox


def load_dataset_dir(path):
    """Load a dataset directory written by :func:`save_dataset`."""
    return load_coco_annotations(
        os.path.join(path, "annotations.json"), os.path.join(path, "images")
    )


__all__ = [
    "BinaryMask",
    "CATEGORIES",
    "ImageSample",
    "InstanceAnnotation",
    "crop_resize",
    "dataset_digest",
    "generate_shapes_dataset",
    "load_coco_annotations",
    "load_dataset_dir",
    "make_mask_target",
    "rasterize_polygon",
    "rle_decode",
    "rle_encode",
    "save_dataset",
    "tight_bbox",
]
