"""Compact convolutional backbone with a feature pyramid.

A stride-2 stem plus four two-conv stages produce features at strides
4/8/16/32; lateral 1x1 convs, nearest top-down upsampling and 3x3 output
convs merge them into a constant-width pyramid. No normalization layers:
training runs one image per step, where batch statistics are meaningless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import torch
from torch import nn
from torch.nn import functional as F

from ..config import Config
from ..errors import ConfigError
from .weight_init import kaiming_fill

PYRAMID_STRIDES = (4, 8, 16, 32)


@dataclass
class FeaturePyramid:
    """Ordered (stride, [C, h, w]) feature maps with constant channels."""

    levels: List[Tuple[int, torch.Tensor]]
    image_size: Tuple[int, int]

    def __post_init__(self):
        strides = [s for s, _ in self.levels]
        if any(b <= a for a, b in zip(strides, strides[1:])):
            raise ConfigError("pyramid strides must be strictly increasing")
        channels = {f.shape[0] for _, f in self.levels}
        if len(channels) > 1:
            raise ConfigError("pyramid channel counts differ: %s" % channels)
        h, w = self.image_size
        for stride, feat in self.levels:
            want = (math.ceil(h / stride), math.ceil(w / stride))
            if tuple(feat.shape[1:]) != want:
                raise ConfigError(
                    "level at stride %d has shape %s, expected %s"
                    % (stride, tuple(feat.shape[1:]), want)
                )

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def channels(self) -> int:
        return self.levels[0][1].shape[0]

    def strides(self) -> List[int]:
        return [s for s, _ in self.levels]

    def feature(self, level_index: int) -> torch.Tensor:
        return self.levels[level_index][1]

    def stride(self, level_index: int) -> int:
        return self.levels[level_index][0]

    def finest(self) -> Tuple[int, torch.Tensor]:
        return self.levels[0]

    def coarsest(self) -> Tuple[int, torch.Tensor]:
        return self.levels[-1]


class PyramidBackbone(nn.Module):
    """Stem + stages + FPN merge, mapping [3, H, W] to a FeaturePyramid."""

    def __init__(self, config: Config):
        super().__init__()
        m = config.model
        dtype = config.torch_dtype()
        self.pyramid_channels = m.pyramid_channels

        self.stem = nn.Sequential(
            nn.Conv2d(3, m.stem_channels, 3, stride=2, padding=1),
            nn.ReLU(),
        )
        stages = []
        in_ch = m.stem_channels
        for out_ch in m.stage_channels:
            stages.append(
                nn.Sequential(
                    nn.Conv2d(in_ch, out_ch, 3, stride=2, padding=1),
                    nn.ReLU(),
                    nn.Conv2d(out_ch, out_ch, 3, stride=1, padding=1),
                    nn.ReLU(),
                )
            )
            in_ch = out_ch
        self.stages = nn.ModuleList(stages)
        self.laterals = nn.ModuleList(
            nn.Conv2d(ch, m.pyramid_channels, 1) for ch in m.stage_channels
        )
        self.outputs = nn.ModuleList(
            nn.Conv2d(m.pyramid_channels, m.pyramid_channels, 3, padding=1)
            for _ in m.stage_channels
        )
        kaiming_fill(self)
        self.to(dtype)

    def forward(self, image: torch.Tensor) -> FeaturePyramid:
        if image.dim() != 3 or image.shape[0] != 3:
            raise ConfigError(
                "backbone expects [3, H, W] input, got %s" % (tuple(image.shape),)
            )
        h, w = int(image.shape[1]), int(image.shape[2])
        x = self.stem(image.unsqueeze(0))
        stage_outputs = []
        for stage in self.stages:
            x = stage(x)
            stage_outputs.append(x)

        merged = [None] * len(stage_outputs)
        top = self.laterals[-1](stage_outputs[-1])
        merged[-1] = top
        for i in range(len(stage_outputs) - 2, -1, -1):
            lateral = self.laterals[i](stage_outputs[i])
            top = lateral + F.interpolate(top, size=lateral.shape[-2:], mode="nearest")
            merged[i] = top
        levels = []
        for i, feat in enumerate(merged):
            out = self.outputs[i](feat).squeeze(0)
            levels.append((PYRAMID_STRIDES[i], out))
        return FeaturePyramid(levels=levels, image_size=(h, w))

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())
