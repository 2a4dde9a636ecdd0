"""Compose the configured techniques around the baseline mask head.

Forward order on mask RoI features: contextual fusion (additive) ->
deconvolutional pyramid -> baseline conv trunk -> deconv upsample ->
boundary refinement -> 1x1 logits. Auxiliary quasi-multitask branches fork
from the post-fusion features in parallel with the main branch. With every
technique off, the composed head is the baseline head: same parameters,
same forward.
"""
from __future__ import annotations

from typing import Dict, Optional, Tuple

import torch
from torch import nn

from ..config import Config
from ..errors import ConfigError
from ..scaffold.heads import BaselineMaskHead
from .boundary import ImprovedBoundaryRefine, OriginalBoundaryRefine
from .deconv_pyramid import DeconvPyramid
from .fusion import ContextualFusion
from .quasi import QuasiMultitask

# fusion_input for ComposedMaskHead.forward: (pyramid feature, stride, (H, W))
FusionInput = Tuple[torch.Tensor, int, Tuple[int, int]]


class ComposedMaskHead(nn.Module):
    def __init__(self, config: Config):
        super().__init__()
        config.validate()
        m = config.model
        h = config.heads
        self.num_classes = m.num_classes
        self.mask_size = m.mask_roi_size * 2

        self.main = BaselineMaskHead(
            m.pyramid_channels, m.mask_conv_channels, m.num_classes
        )

        fusion_cfg = h.contextual_fusion
        self.fusion = (
            ContextualFusion(
                m.pyramid_channels,
                fusion_cfg.conv_filters,
                m.mask_roi_size,
                m.sampling_ratio,
            )
            if fusion_cfg.enabled
            else None
        )
        pyramid_cfg = h.deconv_pyramid
        self.pyramid = (
            DeconvPyramid(pyramid_cfg.channels, pyramid_cfg.depth)
            if pyramid_cfg.enabled
            else None
        )
        boundary_cfg = h.boundary_refinement
        if boundary_cfg.mode == "original":
            self.boundary = OriginalBoundaryRefine(m.mask_conv_channels)
        elif boundary_cfg.mode == "improved":
            self.boundary = ImprovedBoundaryRefine(
                m.mask_conv_channels,
                boundary_cfg.num_dense_modules,
                boundary_cfg.inner_filters,
                boundary_cfg.outer_filters,
            )
        else:
            self.boundary = None
        quasi_cfg = h.quasi_multitask
        self.aux = (
            QuasiMultitask(
                m.pyramid_channels,
                m.mask_conv_channels,
                m.num_classes,
                quasi_cfg.scales,
            )
            if quasi_cfg.scales
            else None
        )

    def forward(
        self,
        roi_features: torch.Tensor,
        fusion_input: Optional[FusionInput] = None,
        compute_aux: Optional[bool] = None,
    ) -> Tuple[torch.Tensor, Dict[float, torch.Tensor]]:
        """Main mask logits [N, K, 28, 28] plus aux logits keyed by scale."""
        n = roi_features.shape[0]
        if n == 0:
            empty = roi_features.new_zeros(
                (0, self.num_classes, self.mask_size, self.mask_size)
            )
            return empty, {}
        x = roi_features
        if self.fusion is not None:
            if fusion_input is None:
                raise ConfigError(
                    "contextual fusion is enabled but no pyramid feature was "
                    "passed to the mask head"
                )
            source, stride, image_size = fusion_input
            delta = self.fusion(source, stride, image_size)
            x = x + delta.unsqueeze(0)

        if compute_aux is None:
            compute_aux = self.training
        aux_outputs: Dict[float, torch.Tensor] = {}
        if self.aux is not None and compute_aux:
            aux_outputs = self.aux(x)

        if self.pyramid is not None:
            x = self.pyramid(x)
        x = self.main.trunk(x)
        x = self.main.upsample(x)
        if self.boundary is not None:
            x = self.boundary(x)
        return self.main.logits(x), aux_outputs

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def aux_parameter_count(self) -> int:
        return 0 if self.aux is None else self.aux.parameter_count()

    def inference_parameter_count(self) -> int:
        return self.parameter_count() - self.aux_parameter_count()


def build_mask_head(config: Config) -> ComposedMaskHead:
    return ComposedMaskHead(config)


def zero_technique_tails(head: ComposedMaskHead) -> ComposedMaskHead:
    """Re-zero every technique's final additive/residual projection."""
    for module in (head.fusion, head.pyramid, head.boundary):
        if module is not None:
            module.zero_tail()
    return head
