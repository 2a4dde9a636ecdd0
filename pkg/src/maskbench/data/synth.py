"""Deterministic synthetic shapes dataset (circle / rectangle / triangle).

A desk-scale stand-in for a real detection corpus: every image gets 1..N
colored shapes on a flat noisy background, with occlusion resolved in draw
order (later shapes own contested pixels). Everything is a pure function of
the generator arguments.
"""
from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from ..errors import DatasetError
from .types import BinaryMask, ImageSample, InstanceAnnotation, tight_bbox

CATEGORIES = {1: "circle", 2: "rectangle", 3: "triangle"}

# Shapes occluded down to fewer pixels than this are dropped outright.
MIN_VISIBLE_PIXELS = 16


def _circle_mask(rng, size):
    margin = size // 8
    r = rng.uniform(size / 12, size / 5)
    cx = rng.uniform(margin + r * 0.5, size - margin - r * 0.5)
    cy = rng.uniform(margin + r * 0.5, size - margin - r * 0.5)
    yy, xx = np.mgrid[0:size, 0:size]
    return ((xx + 0.5 - cx) ** 2 + (yy + 0.5 - cy) ** 2 <= r * r).astype(np.uint8)


def _rectangle_mask(rng, size):
    w = int(rng.integers(size // 8, size // 2))
    h = int(rng.integers(size // 8, size // 2))
    x0 = int(rng.integers(0, size - w))
    y0 = int(rng.integers(0, size - h))
    mask = np.zeros((size, size), dtype=np.uint8)
    mask[y0 : y0 + h, x0 : x0 + w] = 1
    return mask


def _triangle_mask(rng, size):
    # Star-convex triangle: three rays from a center, sorted by angle.
    margin = size // 8
    cx = rng.uniform(margin * 2, size - margin * 2)
    cy = rng.uniform(margin * 2, size - margin * 2)
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=3))
    radii = rng.uniform(size / 10, size / 4, size=3)
    xs = cx + radii * np.cos(angles)
    ys = cy + radii * np.sin(angles)
    return rasterize_polygon(list(np.stack([xs, ys], axis=1).ravel()), size, size)


def rasterize_polygon(flat_coords, height, width):
    """Even-odd rasterization of [x0, y0, x1, y1, ...] over pixel centers."""
    pts = np.asarray(flat_coords, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 3:
        raise DatasetError(f"polygon needs >= 3 vertices, got {len(pts)}")
    yy, xx = np.mgrid[0:height, 0:width]
    px = xx + 0.5
    py = yy + 0.5
    inside = np.zeros((height, width), dtype=bool)
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        crosses = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = (x1 - x0) * (py - y0) / (y1 - y0) + x0
        inside ^= crosses & (px < x_at)
    return inside.astype(np.uint8)


_MASK_FNS = {1: _circle_mask, 2: _rectangle_mask, 3: _triangle_mask}


def generate_shapes_dataset(seed, count, image_size, max_instances):
    """Generate ``count`` ImageSamples, deterministically from ``seed``.

    Instances are drawn back to front; pixels claimed by a later instance
    are punched out of earlier masks. Instances whose visible area falls
    below MIN_VISIBLE_PIXELS are dropped.
    """
    if count < 1:
        raise DatasetError(f"count must be >= 1, got {count}")
    if image_size < 32:
        raise DatasetError(f"image_size must be >= 32, got {image_size}")
    if max_instances < 1:
        raise DatasetError(f"max_instances must be >= 1, got {max_instances}")

    rng = np.random.default_rng(seed)
    samples = []
    for image_id in range(1, count + 1):
        background = rng.uniform(0.1, 0.9, size=3)
        image = np.tile(background, (image_size, image_size, 1))
        n_instances = int(rng.integers(1, max_instances + 1))
        drawn = []  # (category_id, mask) in draw order
        for _ in range(n_instances):
            category_id = int(rng.integers(1, 4))
            mask = _MASK_FNS[category_id](rng, image_size)
            color = rng.uniform(0.05, 0.95, size=3)
            if np.count_nonzero(mask) == 0:
                continue
            image[mask.astype(bool)] = color
            for _, earlier in drawn:
                earlier[mask.astype(bool)] = 0
            drawn.append((category_id, mask))
        image += rng.normal(0.0, 0.02, size=image.shape)
        np.clip(image, 0.0, 1.0, out=image)

        annotations = []
        for category_id, mask in drawn:
            if np.count_nonzero(mask) < MIN_VISIBLE_PIXELS:
                continue
            bbox = tight_bbox(mask)
            annotations.append(
                InstanceAnnotation(
                    category_id=category_id,
                    bbox=bbox,
                    mask=BinaryMask.from_bitmap(mask),
                )
            )
        if not annotations:
            # Guarantee >= 1 instance per image: a centered fallback square.
            side = image_size // 4
            x0 = (image_size - side) // 2
            mask = np.zeros((image_size, image_size), dtype=np.uint8)
            mask[x0 : x0 + side, x0 : x0 + side] = 1
            image[mask.astype(bool)] = rng.uniform(0.05, 0.95, size=3)
            annotations.append(
                InstanceAnnotation(
                    category_id=2,
                    bbox=tight_bbox(mask),
                    mask=BinaryMask.from_bitmap(mask),
                )
            )
        samples.append(
            ImageSample(image_id=image_id, image=image, annotations=annotations)
        )
    return samples


def save_dataset(samples, out_dir):
    """Persist samples as PNG files plus one COCO-format annotation JSON.

    Returns the path of the annotation file.
    """
    from PIL import Image

    images_dir = os.path.join(out_dir, "images")
    os.makedirs(images_dir, exist_ok=True)
    images, annotations = [], []
    ann_id = 1
    for sample in samples:
        file_name = f"img_{sample.image_id:06d}.png"
        arr = np.round(sample.image * 255.0).astype(np.uint8)
        Image.fromarray(arr).save(os.path.join(images_dir, file_name))
        images.append(
            {
                "id": sample.image_id,
                "file_name": file_name,
                "height": sample.height,
                "width": sample.width,
            }
        )
        for ann in sample.annotations:
            annotations.append(
                {
                    "id": ann_id,
                    "image_id": sample.image_id,
                    "category_id": ann.category_id,
                    "bbox": [float(v) for v in ann.bbox],
                    "area": ann.mask.area(),
                    "iscrowd": int(ann.iscrowd),
                    "segmentation": ann.mask.to_coco(),
                }
            )
            ann_id += 1
    doc = {
        "images": images,
        "annotations": annotations,
        "categories": [
            {"id": cid, "name": name} for cid, name in sorted(CATEGORIES.items())
        ],
    }
    ann_path = os.path.join(out_dir, "annotations.json")
    with open(ann_path, "w") as f:
        json.dump(doc, f)
    return ann_path


def dataset_digest(out_dir):
    """SHA-256 digest over every file in the dataset directory (sorted paths)."""
    digest = hashlib.sha256()
    for root, _, files in sorted(os.walk(out_dir)):
        for name in sorted(files):
            path = os.path.join(root, name)
            digest.update(os.path.relpath(path, out_dir).encode())
            with open(path, "rb") as f:
                digest.update(f.read())
    return digest.hexdigest()
