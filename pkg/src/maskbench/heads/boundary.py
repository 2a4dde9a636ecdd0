"""Boundary refinement on the 28x28 pre-logit mask features.

Two variants share the residual placement. The original form is a single
two-conv residual block. The improved form stacks small densely-connected
modules (BatchNorm, PReLU, conv to inner_filters, BatchNorm, PReLU, conv to
outer_filters); module i consumes the concatenation of the head input and
every previous module's output, and a zero-initialized 1x1 projection maps
the full concatenation back to the feature width before the residual add.
"""
from __future__ import annotations

import torch
from torch import nn

from ..scaffold.weight_init import kaiming_fill


class OriginalBoundaryRefine(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.act = nn.ReLU()
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        kaiming_fill(self)
        self.zero_tail()

    def zero_tail(self) -> None:
        nn.init.zeros_(self.conv2.weight)
        nn.init.zeros_(self.conv2.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.conv2(self.act(self.conv1(x)))


class DenseRefineModule(nn.Module):
    """BN -> PReLU -> 3x3 conv(inner) -> BN -> PReLU -> 3x3 conv(outer)."""

    def __init__(self, in_channels: int, inner_filters: int, outer_filters: int):
        super().__init__()
        self.layers = nn.Sequential(
            nn.BatchNorm2d(in_channels),
            nn.PReLU(),
            nn.Conv2d(in_channels, inner_filters, 3, padding=1),
            nn.BatchNorm2d(inner_filters),
            nn.PReLU(),
            nn.Conv2d(inner_filters, outer_filters, 3, padding=1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.layers(x)


class ImprovedBoundaryRefine(nn.Module):
    def __init__(
        self,
        channels: int,
        num_modules: int = 4,
        inner_filters: int = 16,
        outer_filters: int = 4,
    ):
        super().__init__()
        if num_modules < 1:
            raise ValueError("num_modules must be >= 1")
        self.modules_list = nn.ModuleList(
            DenseRefineModule(
                channels + outer_filters * i, inner_filters, outer_filters
            )
            for i in range(num_modules)
        )
        self.project = nn.Conv2d(
            channels + outer_filters * num_modules, channels, 1
        )
        kaiming_fill(self)
        self.zero_tail()

    def zero_tail(self) -> None:
        nn.init.zeros_(self.project.weight)
        nn.init.zeros_(self.project.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        feats = [x]
        for module in self.modules_list:
            feats.append(module(torch.cat(feats, dim=1)))
        return x + self.project(torch.cat(feats, dim=1))
