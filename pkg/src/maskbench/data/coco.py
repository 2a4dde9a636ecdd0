"""COCO-format annotation ingestion (images / annotations / categories).

Supports polygon and uncompressed-RLE segmentations. Compressed RLE strings
are out of scope and rejected with a clear error.
"""
from __future__ import annotations

import json
import os

import numpy as np

from ..errors import DatasetError
from .synth import rasterize_polygon
from .types import BinaryMask, ImageSample, InstanceAnnotation


def _require(record, key, where):
    if key not in record:
        raise DatasetError(f"{where} is missing required key {key!r}")
    return record[key]


def _decode_segmentation(seg, height, width, ann_id):
    if isinstance(seg, dict):
        counts = _require(seg, "counts", f"annotation {ann_id} segmentation")
        if isinstance(counts, str):
            raise DatasetError(
                f"annotation {ann_id}: compressed RLE strings are not supported"
            )
        size = _require(seg, "size", f"annotation {ann_id} segmentation")
        if list(size) != [height, width]:
            raise DatasetError(
                f"annotation {ann_id}: RLE size {size} != image {[height, width]}"
            )
        return BinaryMask.from_rle(counts, height, width).to_bitmap()
    if isinstance(seg, list):
        if not seg:
            raise DatasetError(f"annotation {ann_id}: empty polygon list")
        if not isinstance(seg[0], (list, tuple)):
            seg = [seg]
        bitmap = np.zeros((height, width), dtype=np.uint8)
        for poly in seg:
            if len(poly) < 6 or len(poly) % 2 != 0:
                raise DatasetError(
                    f"annotation {ann_id}: polygon needs >= 3 (x, y) pairs"
                )
            bitmap |= rasterize_polygon(poly, height, width)
        return bitmap
    raise DatasetError(f"annotation {ann_id}: unsupported segmentation payload")


def load_coco_annotations(json_path, image_root, category_filter=None):
    """Load a COCO annotation file into ImageSamples.

    Polygons are rasterized over pixel centers; crowd regions are kept with
    iscrowd=True. Output is ordered by image_id, annotations by id.
    """
    try:
        with open(json_path) as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise DatasetError(f"annotation file not found: {json_path}") from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"annotation file is not valid JSON: {exc}") from None

    for key in ("images", "annotations", "categories"):
        if key not in doc or not isinstance(doc[key], list):
            raise DatasetError(f"annotation file is missing the {key!r} array")

    category_ids = set()
    for cat in doc["categories"]:
        category_ids.add(_require(cat, "id", "category record"))

    images = {}
    for rec in doc["images"]:
        image_id = _require(rec, "id", "image record")
        if image_id in images:
            raise DatasetError(f"duplicate image id {image_id}")
        images[image_id] = rec

    keep = None if category_filter is None else set(category_filter)
    per_image = {image_id: [] for image_id in images}
    for rec in doc["annotations"]:
        ann_id = _require(rec, "id", "annotation record")
        image_id = _require(rec, "image_id", f"annotation {ann_id}")
        if image_id not in images:
            raise DatasetError(
                f"annotation {ann_id} references unknown image_id {image_id}"
            )
        category_id = _require(rec, "category_id", f"annotation {ann_id}")
        if category_id not in category_ids:
            raise DatasetError(
                f"annotation {ann_id} references unknown category_id {category_id}"
            )
        if keep is not None and category_id not in keep:
            continue
        per_image[image_id].append(rec)

    samples = []
    for image_id in sorted(images):
        rec = images[image_id]
        height = int(_require(rec, "height", f"image {image_id}"))
        width = int(_require(rec, "width", f"image {image_id}"))
        file_name = _require(rec, "file_name", f"image {image_id}")
        image = _load_image(image_root, file_name, height, width)
        annotations = []
        for ann in sorted(per_image[image_id], key=lambda a: a["id"]):
            seg = _require(ann, "segmentation", f"annotation {ann['id']}")
            bitmap = _decode_segmentation(seg, height, width, ann["id"])
            bbox = _require(ann, "bbox", f"annotation {ann['id']}")
            if len(bbox) != 4 or bbox[2] <= 0 or bbox[3] <= 0:
                raise DatasetError(
                    f"annotation {ann['id']}: bbox must be (x, y, w>0, h>0), got {bbox}"
                )
            annotations.append(
                InstanceAnnotation(
                    category_id=int(ann["category_id"]),
                    bbox=tuple(float(v) for v in bbox),
                    mask=BinaryMask.from_bitmap(bitmap),
                    iscrowd=bool(ann.get("iscrowd", 0)),
                )
            )
        samples.append(
            ImageSample(image_id=image_id, image=image, annotations=annotations)
        )
    return samples


def _load_image(image_root, file_name, height, width):
    from PIL import Image

    path = os.path.join(image_root, file_name)
    if not os.path.exists(path):
        raise DatasetError(f"image file not found: {path}")
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    if arr.shape[:2] != (height, width):
        raise DatasetError(
            f"{file_name}: file is {arr.shape[:2]}, header says {(height, width)}"
        )
    return arr
