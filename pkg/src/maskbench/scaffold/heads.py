"""Detection head, baseline mask head, and mask pasting.

The baseline mask head is the reference the technique builders extend: four
3x3 convs, one stride-2 deconv to double the grid, and a 1x1 conv to
per-class mask logits (sigmoid applied downstream).
"""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np
import torch
from torch import nn

from .. import kernels
from ..data.types import BinaryMask
from .weight_init import kaiming_fill, predictor_fill


class DetectionHead(nn.Module):
    """Two shared FC layers with parallel classification and box outputs."""

    def __init__(self, in_channels: int, roi_size: int, fc_dim: int,
                 num_classes: int):
        super().__init__()
        self.num_classes = num_classes
        flat = in_channels * roi_size * roi_size
        self.fc1 = nn.Linear(flat, fc_dim)
        self.fc2 = nn.Linear(fc_dim, fc_dim)
        self.act = nn.ReLU()
        self.cls = nn.Linear(fc_dim, num_classes + 1)
        self.box = nn.Linear(fc_dim, num_classes * 4)
        kaiming_fill(self)
        predictor_fill(self.cls, std=0.01)
        predictor_fill(self.box, std=0.001)

    def forward(self, roi_features: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        n = roi_features.shape[0]
        x = roi_features.reshape(n, -1)
        x = self.act(self.fc1(x))
        x = self.act(self.fc2(x))
        logits = self.cls(x)
        deltas = self.box(x).reshape(n, self.num_classes, 4)
        return logits, deltas


class BaselineMaskHead(nn.Module):
    """Conv trunk + 2x deconv + per-class 1x1 mask logits.

    The stages are exposed separately (trunk / upsample / logits) so the
    technique builders can interleave extra modules without duplicating
    parameters.
    """

    def __init__(self, in_channels: int, conv_channels: int, num_classes: int,
                 activation=nn.ReLU):
        super().__init__()
        act = activation if activation is not None else nn.Identity
        convs = []
        ch = in_channels
        for _ in range(4):
            convs.append(nn.Conv2d(ch, conv_channels, 3, padding=1))
            convs.append(act())
            ch = conv_channels
        self.trunk = nn.Sequential(*convs)
        self.upsample = nn.Sequential(
            nn.ConvTranspose2d(conv_channels, conv_channels, 2, stride=2),
            act(),
        )
        self.logits = nn.Conv2d(conv_channels, num_classes, 1)
        kaiming_fill(self)
        predictor_fill(self.logits, std=0.01)

    def forward(self, roi_features: torch.Tensor) -> torch.Tensor:
        x = self.trunk(roi_features)
        x = self.upsample(x)
        return self.logits(x)


def encode_boxes(proposals: np.ndarray, gt_boxes: np.ndarray) -> np.ndarray:
    """Regression targets (dx, dy, dw, dh) from proposals to gt boxes."""
    proposals = np.asarray(proposals, dtype=np.float64).reshape(-1, 4)
    gt_boxes = np.asarray(gt_boxes, dtype=np.float64).reshape(-1, 4)
    pw = proposals[:, 2] - proposals[:, 0]
    ph = proposals[:, 3] - proposals[:, 1]
    pcx = (proposals[:, 0] + proposals[:, 2]) / 2.0
    pcy = (proposals[:, 1] + proposals[:, 3]) / 2.0
    gw = gt_boxes[:, 2] - gt_boxes[:, 0]
    gh = gt_boxes[:, 3] - gt_boxes[:, 1]
    gcx = (gt_boxes[:, 0] + gt_boxes[:, 2]) / 2.0
    gcy = (gt_boxes[:, 1] + gt_boxes[:, 3]) / 2.0
    return np.stack(
        [
            (gcx - pcx) / pw,
            (gcy - pcy) / ph,
            np.log(gw / pw),
            np.log(gh / ph),
        ],
        axis=1,
    )


def decode_boxes(proposals: np.ndarray, deltas: np.ndarray, image_size) -> np.ndarray:
    """Apply (dx, dy, dw, dh) deltas to proposals, clipped to the image."""
    proposals = np.asarray(proposals, dtype=np.float64).reshape(-1, 4)
    deltas = np.asarray(deltas, dtype=np.float64).reshape(-1, 4)
    h, w = image_size
    pw = proposals[:, 2] - proposals[:, 0]
    ph = proposals[:, 3] - proposals[:, 1]
    cx = (proposals[:, 0] + proposals[:, 2]) / 2.0 + deltas[:, 0] * pw
    cy = (proposals[:, 1] + proposals[:, 3]) / 2.0 + deltas[:, 1] * ph
    nw = pw * np.exp(np.minimum(deltas[:, 2], 4.0))
    nh = ph * np.exp(np.minimum(deltas[:, 3], 4.0))
    out = np.stack(
        [cx - nw / 2.0, cy - nh / 2.0, cx + nw / 2.0, cy + nh / 2.0], axis=1
    )
    out[:, 0] = np.clip(out[:, 0], 0.0, w - 1.0)
    out[:, 1] = np.clip(out[:, 1], 0.0, h - 1.0)
    out[:, 2] = np.clip(out[:, 2], out[:, 0] + 1e-3, w)
    out[:, 3] = np.clip(out[:, 3], out[:, 1] + 1e-3, h)
    return out


def paste_mask(
    mask_probs, box, image_size: Tuple[int, int], threshold: float = 0.5
) -> BinaryMask:
    """Resample a probability grid into the box and threshold onto a canvas.

    The painted region spans the pixels whose rectangle the box touches
    (floor/ceil expansion); each canvas pixel samples the grid bilinearly at
    its own center mapped into box-relative coordinates.
    """
    h, w = (int(v) for v in image_size)
    canvas = np.zeros((h, w), dtype=np.uint8)
    probs = np.asarray(
        mask_probs.detach().cpu().numpy() if torch.is_tensor(mask_probs) else mask_probs,
        dtype=np.float64,
    )
    x1, y1, x2, y2 = (float(v) for v in box)
    if x2 <= x1 or y2 <= y1:
        return BinaryMask.from_bitmap(canvas)
    mh, mw = probs.shape
    x_lo = max(0, int(np.floor(x1)))
    y_lo = max(0, int(np.floor(y1)))
    x_hi = min(w, int(np.ceil(x2)))
    y_hi = min(h, int(np.ceil(y2)))
    if x_hi <= x_lo or y_hi <= y_lo:
        return BinaryMask.from_bitmap(canvas)
    xs = (np.arange(x_lo, x_hi, dtype=np.float64) + 0.5 - x1) / (x2 - x1) * mw - 0.5
    ys = (np.arange(y_lo, y_hi, dtype=np.float64) + 0.5 - y1) / (y2 - y1) * mh - 0.5
    values = kernels.grid_sample_2d(probs, ys, xs)
    canvas[y_lo:y_hi, x_lo:x_hi] = (values >= threshold).astype(np.uint8)
    return BinaryMask.from_bitmap(canvas)
