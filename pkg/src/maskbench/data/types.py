"""Core dataset records: binary masks, instance annotations, image samples."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..errors import CodecError, DatasetError


class BinaryMask:
    """A per-instance binary mask, stored dense (uint8 bitmap) or as RLE.

    RLE counts are column-major and start with the number of leading zeros
    (possibly 0); they always sum to height * width.
    """

    __slots__ = ("height", "width", "_bitmap", "_counts")

    def __init__(self, height, width, bitmap=None, counts=None):
        if (bitmap is None) == (counts is None):
            raise CodecError("exactly one of bitmap/counts must be given")
        self.height = int(height)
        self.width = int(width)
        if bitmap is not None:
            bitmap = np.ascontiguousarray(bitmap)
            if bitmap.shape != (self.height, self.width):
                raise CodecError(
                    f"bitmap shape {bitmap.shape} != ({self.height}, {self.width})"
                )
            bitmap = (bitmap != 0).astype(np.uint8)
        self._bitmap = bitmap
        self._counts = None if counts is None else [int(c) for c in counts]

    @classmethod
    def from_bitmap(cls, bitmap):
        bitmap = np.asarray(bitmap)
        return cls(bitmap.shape[0], bitmap.shape[1], bitmap=bitmap)

    @classmethod
    def from_rle(cls, counts, height, width):
        if sum(int(c) for c in counts) != height * width:
            raise CodecError(
                f"counts sum {sum(int(c) for c in counts)} != {height}x{width}"
            )
        return cls(height, width, counts=counts)

    @property
    def is_dense(self):
        return self._bitmap is not None

    def to_bitmap(self):
        """Dense uint8 [H, W] view of the mask (decoding if needed)."""
        if self._bitmap is None:
            self._bitmap = kernels.rle_decode(self._counts, self.height, self.width)
        return self._bitmap

    def to_counts(self):
        """Column-major RLE counts (encoding if needed)."""
        if self._counts is None:
            self._counts = [int(c) for c in kernels.rle_encode(self._bitmap)]
        return list(self._counts)

    def area(self):
        if self._counts is not None:
            return sum(self._counts[1::2])
        return int(np.count_nonzero(self._bitmap))

    def to_coco(self):
        """Uncompressed COCO RLE dict: {"size": [h, w], "counts": [...]}."""
        return {"size": [self.height, self.width], "counts": self.to_counts()}

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return (
            self.height == other.height
            and self.width == other.width
            and np.array_equal(self.to_bitmap(), other.to_bitmap())
        )


def rle_encode(mask: BinaryMask) -> BinaryMask:
    """Re-encode a mask with an RLE payload."""
    return BinaryMask.from_rle(mask.to_counts(), mask.height, mask.width)


def rle_decode(mask: BinaryMask) -> BinaryMask:
    """Re-encode a mask with a dense payload."""
    return BinaryMask.from_bitmap(mask.to_bitmap())


def tight_bbox(bitmap):
    """Tight (x, y, w, h) box around the set pixels; None for an empty mask."""
    rows = np.flatnonzero(bitmap.any(axis=1))
    cols = np.flatnonzero(bitmap.any(axis=0))
    if len(rows) == 0:
        return None
    y0, y1 = int(rows[0]), int(rows[-1])
    x0, x1 = int(cols[0]), int(cols[-1])
    return (float(x0), float(y0), float(x1 - x0 + 1), float(y1 - y0 + 1))


@dataclass
class InstanceAnnotation:
    """One ground-truth instance.

    bbox is (x, y, w, h) in pixels and must stay within 1px per edge of the
    tight box around the mask; the mask covers the full image canvas.
    """

    category_id: int
    bbox: tuple[float, float, float, float]
    mask: BinaryMask
    iscrowd: bool = False

    def __post_init__(self):
        if self.category_id < 1:
            raise DatasetError(f"category_id must be >= 1, got {self.category_id}")
        x, y, w, h = self.bbox
        if w <= 0 or h <= 0:
            raise DatasetError(f"bbox must have positive size, got {self.bbox}")

    @property
    def bbox_xyxy(self):
        x, y, w, h = self.bbox
        return (x, y, x + w, y + h)

    def validate_against(self, height, width):
        """Check the image-level invariants (dimensions, bounds, tightness)."""
        if (self.mask.height, self.mask.width) != (height, width):
            raise DatasetError(
                f"mask {self.mask.height}x{self.mask.width} does not match "
                f"image {height}x{width}"
            )
        x, y, w, h = self.bbox
        if x < 0 or y < 0 or x + w > width + 1e-6 or y + h > height + 1e-6:
            raise DatasetError(f"bbox {self.bbox} outside image {height}x{width}")
        tight = tight_bbox(self.mask.to_bitmap())
        if tight is not None:
            for got, want in zip(self.bbox, tight):
                if abs(got - want) > 1.0 + 1e-6:
                    raise DatasetError(
                        f"bbox {self.bbox} not tight around mask box {tight}"
                    )


@dataclass
class ImageSample:
    """An image plus its instances. image is [H, W, 3] float in [0, 1]."""

    image_id: int
    image: np.ndarray
    annotations: list[InstanceAnnotation] = field(default_factory=list)

    @property
    def height(self):
        return self.image.shape[0]

    @property
    def width(self):
        return self.image.shape[1]

    def validate(self):
        for ann in self.annotations:
            ann.validate_against(self.height, self.width)
        return self
