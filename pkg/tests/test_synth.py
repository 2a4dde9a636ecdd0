"""Synthetic shapes dataset: determinism, annotation integrity, digests."""
import json
import os

import numpy as np
import pytest

from maskbench.data.synth import (
    CATEGORIES,
    dataset_digest,
    generate_shapes_dataset,
    rasterize_polygon,
    save_dataset,
)
from maskbench.data.types import tight_bbox
from maskbench.errors import DatasetError


def test_same_seed_identical():
    a = generate_shapes_dataset(seed=7, count=5, image_size=64, max_instances=3)
    b = generate_shapes_dataset(seed=7, count=5, image_size=64, max_instances=3)
    for sa, sb in zip(a, b):
        assert sa.image_id == sb.image_id
        assert np.array_equal(sa.image, sb.image)
        assert len(sa.annotations) == len(sb.annotations)
        for aa, ab in zip(sa.annotations, sb.annotations):
            assert aa.category_id == ab.category_id
            assert aa.bbox == ab.bbox
            assert aa.mask == ab.mask


def test_different_seed_differs():
    a = generate_shapes_dataset(seed=7, count=5, image_size=64, max_instances=3)
    b = generate_shapes_dataset(seed=8, count=5, image_size=64, max_instances=3)
    assert any(
        not np.array_equal(sa.image, sb.image) for sa, sb in zip(a, b)
    )


def test_counts_and_bounds():
    samples = generate_shapes_dataset(seed=3, count=12, image_size=48, max_instances=4)
    assert len(samples) == 12
    for sample in samples:
        assert sample.image.shape == (48, 48, 3)
        assert sample.image.min() >= 0.0 and sample.image.max() <= 1.0
        assert 1 <= len(sample.annotations) <= 4
        for ann in sample.annotations:
            assert ann.category_id in CATEGORIES


def test_tight_bbox_invariant():
    samples = generate_shapes_dataset(seed=11, count=8, image_size=64, max_instances=3)
    for sample in samples:
        for ann in sample.annotations:
            x, y, w, h = ann.bbox
            tx1, ty1, tx2, ty2 = tight_bbox(ann.mask.to_bitmap())
            assert abs(x - tx1) <= 1.0
            assert abs(y - ty1) <= 1.0
            assert abs((x + w) - tx2) <= 1.0
            assert abs((y + h) - ty2) <= 1.0


def test_mask_dims_match_image():
    samples = generate_shapes_dataset(seed=2, count=4, image_size=40, max_instances=2)
    for sample in samples:
        for ann in sample.annotations:
            assert ann.mask.height == sample.height
            assert ann.mask.width == sample.width


def test_invalid_arguments():
    with pytest.raises(DatasetError):
        generate_shapes_dataset(seed=0, count=0, image_size=64, max_instances=2)
    with pytest.raises(DatasetError):
        generate_shapes_dataset(seed=0, count=1, image_size=8, max_instances=2)
    with pytest.raises(DatasetError):
        generate_shapes_dataset(seed=0, count=1, image_size=64, max_instances=0)


def test_occlusion_masks_disjoint():
    # later shapes own contested pixels, so per-image masks never overlap
    samples = generate_shapes_dataset(seed=5, count=10, image_size=64, max_instances=4)
    for sample in samples:
        stack = np.stack([a.mask.to_bitmap() for a in sample.annotations])
        assert stack.sum(axis=0).max() <= 1


def test_save_dataset_and_digest(tmp_path):
    samples = generate_shapes_dataset(seed=4, count=3, image_size=48, max_instances=2)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    save_dataset(samples, out_a)
    save_dataset(samples, out_b)
    assert dataset_digest(out_a) == dataset_digest(out_b)
    with open(out_a / "annotations.json") as fh:
        doc = json.load(fh)
    assert {c["name"] for c in doc["categories"]} == set(CATEGORIES.values())
    assert len(doc["images"]) == 3
    assert os.path.isdir(out_a / "images")


def test_rasterize_polygon_square():
    # square with corners (2,2)-(6,6) covers pixel centers (2..5) x (2..5)
    coords = [2.0, 2.0, 6.0, 2.0, 6.0, 6.0, 2.0, 6.0]
    mask = rasterize_polygon(coords, 8, 8)
    assert mask.sum() == 16
    assert mask[2:6, 2:6].all()
