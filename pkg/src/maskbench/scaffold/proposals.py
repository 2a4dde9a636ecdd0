"""Proposal sources and RoI sampling.

Two proposal modes: gt_boxes returns the ground-truth boxes (optionally
jittered) so mask-branch experiments are not confounded by proposal
quality; learned runs a light per-level objectness/regression head over
single square base boxes and keeps the top-K after NMS.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import torch
from torch import nn

from ..config import Config
from ..errors import ConfigError
from ..evaluation.iou import box_iou_matrix
from .weight_init import predictor_fill
from ..evaluation.postprocess import nms
from .backbone import FeaturePyramid


@dataclass
class RoiBatch:
    """Proposal boxes with pyramid assignment and sampling labels."""

    boxes: np.ndarray  # [N, 4] xyxy image coordinates
    level_index: np.ndarray  # [N]
    is_foreground: np.ndarray  # [N]
    matched_gt: List[Optional[object]] = field(default_factory=list)
    scores: Optional[np.ndarray] = None

    def __post_init__(self):
        self.boxes = np.asarray(self.boxes, dtype=np.float64).reshape(-1, 4)
        self.level_index = np.asarray(self.level_index, dtype=np.int64).reshape(-1)
        self.is_foreground = np.asarray(self.is_foreground, dtype=bool).reshape(-1)
        if not self.matched_gt:
            self.matched_gt = [None] * len(self.boxes)
        if len(self.boxes) and (
            np.any(self.boxes[:, 2] <= self.boxes[:, 0])
            or np.any(self.boxes[:, 3] <= self.boxes[:, 1])
        ):
            raise ConfigError("RoiBatch boxes must satisfy x2 > x1 and y2 > y1")

    def __len__(self) -> int:
        return len(self.boxes)

    @classmethod
    def empty(cls) -> "RoiBatch":
        return cls(
            boxes=np.zeros((0, 4)),
            level_index=np.zeros(0, dtype=np.int64),
            is_foreground=np.zeros(0, dtype=bool),
        )


def assign_pyramid_level(
    box, num_levels: int, k0: int = 1, canonical_scale: float = 56.0
) -> int:
    """Heuristic pyramid routing: larger boxes read coarser levels."""
    x1, y1, x2, y2 = (float(v) for v in box)
    area = (x2 - x1) * (y2 - y1)
    if area <= 0:
        raise ConfigError("pyramid assignment needs a positive-area box")
    level = math.floor(k0 + math.log2(math.sqrt(area) / canonical_scale))
    return int(min(max(level, 0), num_levels - 1))


def assign_pyramid_levels(boxes: np.ndarray, num_levels: int, k0: int,
                          canonical_scale: float) -> np.ndarray:
    return np.array(
        [assign_pyramid_level(b, num_levels, k0, canonical_scale) for b in boxes],
        dtype=np.int64,
    )


def jitter_boxes(
    boxes: np.ndarray, sigma: float, rng: np.random.Generator, image_size
) -> np.ndarray:
    """Uniform box noise: centers shift by size*U(-sigma, sigma) and sizes
    rescale by (1 + U(-sigma, sigma)).

    For sigma <= 0.15 the worst-case IoU against the source box stays above
    0.5 (the extreme corner of the noise cube gives IoU ~= 0.535 at 0.15 and
    ~= 0.664 at 0.10), so jittered proposals keep their foreground label
    under the 0.5 threshold.
    """
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    if sigma == 0 or len(boxes) == 0:
        return boxes.copy()
    h, w = image_size
    cx = (boxes[:, 0] + boxes[:, 2]) / 2.0
    cy = (boxes[:, 1] + boxes[:, 3]) / 2.0
    bw = boxes[:, 2] - boxes[:, 0]
    bh = boxes[:, 3] - boxes[:, 1]
    noise = rng.uniform(-sigma, sigma, size=(len(boxes), 4))
    cx = cx + bw * noise[:, 0]
    cy = cy + bh * noise[:, 1]
    bw = bw * (1.0 + noise[:, 2])
    bh = bh * (1.0 + noise[:, 3])
    out = np.stack(
        [cx - bw / 2.0, cy - bh / 2.0, cx + bw / 2.0, cy + bh / 2.0], axis=1
    )
    out[:, 0] = np.clip(out[:, 0], 0.0, w - 1.0)
    out[:, 1] = np.clip(out[:, 1], 0.0, h - 1.0)
    out[:, 2] = np.clip(out[:, 2], out[:, 0] + 1e-3, w)
    out[:, 3] = np.clip(out[:, 3], out[:, 1] + 1e-3, h)
    return out


class ProposalHead(nn.Module):
    """Single 3x3 conv emitting objectness + box deltas per level.

    Each location owns one square base box of side anchor_scale * stride
    centered on the pixel; deltas follow the usual (dx, dy, dw, dh)
    parameterization relative to that base box.
    """

    def __init__(self, config: Config):
        super().__init__()
        self.anchor_scale = float(config.proposals.anchor_scale)
        self.conv = nn.Conv2d(config.model.pyramid_channels, 5, 3, padding=1)
        predictor_fill(self.conv, std=0.01)
        self.to(config.torch_dtype())

    def forward(self, pyramid: FeaturePyramid) -> List[torch.Tensor]:
        return [self.conv(feat.unsqueeze(0)).squeeze(0) for _, feat in pyramid.levels]

    def base_boxes(self, stride: int, h: int, w: int) -> np.ndarray:
        side = self.anchor_scale * stride
        ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        cx = (xs.reshape(-1) + 0.5) * stride
        cy = (ys.reshape(-1) + 0.5) * stride
        half = side / 2.0
        return np.stack([cx - half, cy - half, cx + half, cy + half], axis=1)

    def decode(self, base: np.ndarray, deltas: np.ndarray, image_size) -> np.ndarray:
        h, w = image_size
        bw = base[:, 2] - base[:, 0]
        bh = base[:, 3] - base[:, 1]
        cx = (base[:, 0] + base[:, 2]) / 2.0 + deltas[:, 0] * bw
        cy = (base[:, 1] + base[:, 3]) / 2.0 + deltas[:, 1] * bh
        nw = bw * np.exp(np.minimum(deltas[:, 2], 4.0))
        nh = bh * np.exp(np.minimum(deltas[:, 3], 4.0))
        out = np.stack(
            [cx - nw / 2.0, cy - nh / 2.0, cx + nw / 2.0, cy + nh / 2.0], axis=1
        )
        out[:, 0] = np.clip(out[:, 0], 0.0, w - 1.0)
        out[:, 1] = np.clip(out[:, 1], 0.0, h - 1.0)
        out[:, 2] = np.clip(out[:, 2], out[:, 0] + 1e-3, w)
        out[:, 3] = np.clip(out[:, 3], out[:, 1] + 1e-3, h)
        return out

    def propose_boxes(self, pyramid: FeaturePyramid, config: Config):
        """Score, decode, filter, NMS and cap the per-level proposals."""
        all_boxes, all_scores = [], []
        with torch.no_grad():
            outputs = self.forward(pyramid)
        for (stride, feat), out in zip(pyramid.levels, outputs):
            _, h, w = feat.shape
            scores = torch.sigmoid(out[0]).reshape(-1).double().numpy()
            deltas = out[1:5].reshape(4, -1).T.double().numpy()
            base = self.base_boxes(stride, h, w)
            boxes = self.decode(base, deltas, pyramid.image_size)
            keep = scores >= config.proposals.objectness_threshold
            all_boxes.append(boxes[keep])
            all_scores.append(scores[keep])
        boxes = np.concatenate(all_boxes, axis=0)
        scores = np.concatenate(all_scores, axis=0)
        if len(boxes) == 0:
            return boxes.reshape(0, 4), scores
        kept = nms(boxes, scores, config.proposals.nms_threshold)
        kept = kept[: config.proposals.topk]
        return boxes[kept], scores[kept]


def propose(
    pyramid: FeaturePyramid,
    gt,
    mode: str,
    config: Config,
    rng: Optional[np.random.Generator] = None,
    head: Optional[ProposalHead] = None,
    apply_jitter: bool = True,
) -> RoiBatch:
    """Build the proposal RoiBatch for one image."""
    m = config.model
    if mode == "gt_boxes":
        if not gt:
            raise ConfigError("gt_boxes proposal mode requires annotations")
        boxes = np.stack([np.asarray(a.bbox_xyxy, dtype=np.float64) for a in gt])
        sigma = config.proposals.jitter
        if apply_jitter and sigma > 0:
            if rng is None:
                raise ConfigError("jittered proposals need a random generator")
            boxes = jitter_boxes(boxes, sigma, rng, pyramid.image_size)
        scores = None
    elif mode == "learned":
        if head is None:
            raise ConfigError("learned proposal mode requires a proposal head")
        boxes, scores = head.propose_boxes(pyramid, config)
        if len(boxes) == 0:
            return RoiBatch.empty()
    else:
        raise ConfigError("unknown proposal mode %r" % (mode,))
    levels = assign_pyramid_levels(
        boxes, pyramid.num_levels, m.level_k0, m.level_canonical_scale
    )
    return RoiBatch(
        boxes=boxes,
        level_index=levels,
        is_foreground=np.zeros(len(boxes), dtype=bool),
        scores=scores,
    )


def sample_rois(
    proposals: RoiBatch,
    gt,
    total: int = 512,
    pos_fraction: float = 0.25,
    fg_iou_threshold: float = 0.5,
    rng: Optional[np.random.Generator] = None,
) -> RoiBatch:
    """Label proposals against ground truth and subsample a training batch.

    Foreground means max IoU with a non-crowd gt >= fg_iou_threshold; at
    most floor(total * pos_fraction) foregrounds are kept (so the
    foreground share of the requested batch never exceeds pos_fraction)
    and the remainder fills with background when available.
    """
    if total < 4:
        raise ConfigError("sample_rois needs total >= 4, got %d" % total)
    if len(proposals) == 0:
        return RoiBatch.empty()
    if rng is None:
        rng = np.random.default_rng(0)

    candidates = [a for a in gt if not a.iscrowd]
    n = len(proposals)
    if candidates:
        gt_boxes = np.stack(
            [np.asarray(a.bbox_xyxy, dtype=np.float64) for a in candidates]
        )
        iou = box_iou_matrix(proposals.boxes, gt_boxes)
        best = iou.argmax(axis=1)
        best_iou = iou[np.arange(n), best]
    else:
        best = np.zeros(n, dtype=np.int64)
        best_iou = np.zeros(n, dtype=np.float64)

    fg_mask = best_iou >= fg_iou_threshold
    fg_idx = np.nonzero(fg_mask)[0]
    bg_idx = np.nonzero(~fg_mask)[0]
    num_pos = min(len(fg_idx), int(total * pos_fraction))
    num_neg = min(len(bg_idx), total - num_pos)
    fg_pick = rng.permutation(fg_idx)[:num_pos]
    bg_pick = rng.permutation(bg_idx)[:num_neg]
    keep = np.concatenate([np.sort(fg_pick), np.sort(bg_pick)]).astype(np.int64)

    matched = [
        candidates[best[i]] if fg_mask[i] else None for i in keep
    ]
    return RoiBatch(
        boxes=proposals.boxes[keep],
        level_index=proposals.level_index[keep],
        is_foreground=fg_mask[keep],
        matched_gt=matched,
        scores=None if proposals.scores is None else proposals.scores[keep],
    )
