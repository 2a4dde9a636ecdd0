"""Deconvolutional pyramid: upsample first, then downsample with laterals.

The up path doubles the grid ``depth`` times with stride-2 deconvs; the
down path halves it back with stride-2 convs, adding the matching up-path
feature at every resolution (addition, not concatenation). The conv
producing the final, input-resolution contribution is zero-initialized so
the module starts as an exact identity.
"""
from __future__ import annotations

import torch
from torch import nn

from ..scaffold.weight_init import kaiming_fill


class DeconvPyramid(nn.Module):
    def __init__(self, channels: int, depth: int = 2):
        super().__init__()
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.depth = int(depth)
        self.ups = nn.ModuleList(
            nn.ConvTranspose2d(channels, channels, 2, stride=2)
            for _ in range(self.depth)
        )
        # downs[k] maps resolution level k+1 back to level k
        self.downs = nn.ModuleList(
            nn.Conv2d(channels, channels, 3, stride=2, padding=1)
            for _ in range(self.depth)
        )
        self.act = nn.ReLU()
        kaiming_fill(self)
        self.zero_tail()

    def zero_tail(self) -> None:
        nn.init.zeros_(self.downs[0].weight)
        nn.init.zeros_(self.downs[0].bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        levels = [x]
        for up in self.ups:
            levels.append(self.act(up(levels[-1])))
        d = levels[-1]
        for k in range(self.depth - 1, -1, -1):
            d = self.downs[k](d) + levels[k]
        return d
