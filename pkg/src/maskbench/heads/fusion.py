"""Contextual fusion: add one whole-image descriptor to every RoI.

A single full-image RoIAlign over a chosen pyramid level produces a global
grid at the mask-branch resolution; a small conv stack maps it to the RoI
feature width and the result is broadcast-added to all RoI features of the
image. The final conv is zero-initialized so an untrained fusion branch is
an exact additive identity.
"""
from __future__ import annotations

from typing import Sequence, Tuple

import torch
from torch import nn

from ..scaffold.roi_align import roi_align
from ..scaffold.weight_init import kaiming_fill


class ContextualFusion(nn.Module):
    def __init__(
        self,
        in_channels: int,
        conv_filters: Sequence[int],
        roi_size: int,
        sampling_ratio: int = 2,
    ):
        super().__init__()
        if not conv_filters:
            raise ValueError("conv_filters must be nonempty")
        self.roi_size = int(roi_size)
        self.sampling_ratio = int(sampling_ratio)
        layers = []
        ch = in_channels
        for i, f in enumerate(conv_filters):
            layers.append(nn.Conv2d(ch, f, 3, padding=1))
            if i < len(conv_filters) - 1:
                layers.append(nn.ReLU())
            ch = f
        self.convs = nn.Sequential(*layers)
        kaiming_fill(self)
        self.zero_tail()

    def zero_tail(self) -> None:
        last = self.convs[-1]
        nn.init.zeros_(last.weight)
        nn.init.zeros_(last.bias)

    def forward(
        self,
        source_feature: torch.Tensor,
        stride: int,
        image_size: Tuple[int, int],
    ) -> torch.Tensor:
        """Per-image fusion delta of shape [filters[-1], roi, roi]."""
        h, w = image_size
        box = source_feature.new_tensor([[0.0, 0.0, float(w), float(h)]])
        grid = roi_align(
            source_feature, box, self.roi_size, stride, self.sampling_ratio
        )
        return self.convs(grid).squeeze(0)
