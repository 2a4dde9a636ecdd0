"""Quasi-multitask learning: loss-only auxiliary mask branches.

Each branch clones the baseline head's layer sequence with independent
parameters, differing only at the tail: the 0.5x branch omits the final
deconv (half-resolution output), the 2x branch appends one extra stride-2
deconv (double resolution). The branches feed auxiliary losses and never
run at inference, so the inference graph is unchanged.
"""
from __future__ import annotations

from typing import Dict, Sequence

import torch
from torch import nn

from ..scaffold.weight_init import kaiming_fill, predictor_fill


class AuxMaskBranch(nn.Module):
    def __init__(
        self,
        in_channels: int,
        conv_channels: int,
        num_classes: int,
        scale: float,
        activation=nn.ReLU,
    ):
        super().__init__()
        if scale not in (0.5, 2.0):
            raise ValueError("aux branch scale must be 0.5 or 2.0, got %r" % scale)
        self.scale = float(scale)
        act = activation if activation is not None else nn.Identity
        layers = []
        ch = in_channels
        for _ in range(4):
            layers.append(nn.Conv2d(ch, conv_channels, 3, padding=1))
            layers.append(act())
            ch = conv_channels
        num_deconvs = 0 if scale == 0.5 else 2
        for _ in range(num_deconvs):
            layers.append(nn.ConvTranspose2d(conv_channels, conv_channels, 2, stride=2))
            layers.append(act())
        layers.append(nn.Conv2d(conv_channels, num_classes, 1))
        self.layers = nn.Sequential(*layers)
        kaiming_fill(self)
        predictor_fill(self.layers[-1], std=0.01)

    def forward(self, roi_features: torch.Tensor) -> torch.Tensor:
        return self.layers(roi_features)


class QuasiMultitask(nn.Module):
    """Container for the configured auxiliary branches, keyed by scale."""

    def __init__(
        self,
        in_channels: int,
        conv_channels: int,
        num_classes: int,
        scales: Sequence[float],
    ):
        super().__init__()
        self.scales = tuple(float(s) for s in scales)
        self.branches = nn.ModuleDict(
            {
                _key(s): AuxMaskBranch(in_channels, conv_channels, num_classes, s)
                for s in self.scales
            }
        )

    def forward(self, roi_features: torch.Tensor) -> Dict[float, torch.Tensor]:
        return {s: self.branches[_key(s)](roi_features) for s in self.scales}

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def _key(scale: float) -> str:
    return ("x%g" % scale).replace(".", "_")
