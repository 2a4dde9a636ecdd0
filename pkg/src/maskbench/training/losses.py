"""Loss components and the biased-training assembly rule.

The total is l_cls + l_box + alpha * (l_mask + sum of weighted auxiliary
mask losses): alpha multiplies the entire mask side, because the auxiliary
branches are mask-branch members.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict

import torch
from torch.nn import functional as F

from ..errors import TrainingDiverged


@dataclass
class LossBundle:
    l_cls: object
    l_box: object
    l_mask: object
    aux_losses: Dict[float, object] = field(default_factory=dict)
    alpha: float = 1.0
    aux_weight: float = 1.0
    total: object = 0.0

    def to_floats(self) -> dict:
        def as_float(value):
            return float(value.detach()) if torch.is_tensor(value) else float(value)

        out = {
            "l_cls": as_float(self.l_cls),
            "l_box": as_float(self.l_box),
            "l_mask": as_float(self.l_mask),
            "alpha": as_float(self.alpha),
            "total": as_float(self.total),
        }
        for scale in sorted(self.aux_losses):
            out["l_aux_%g" % scale] = as_float(self.aux_losses[scale])
        return out


def mask_loss(mask_logits: torch.Tensor, targets: torch.Tensor,
              classes: torch.Tensor) -> torch.Tensor:
    """Per-class binary cross-entropy on each RoI's matched-class channel.

    ``classes`` holds 1-based category ids; the mean runs over all RoIs and
    pixels together. Zero (detached) when there are no foreground RoIs.
    """
    n = mask_logits.shape[0]
    if n == 0:
        return mask_logits.new_zeros(())
    idx = torch.arange(n, device=mask_logits.device)
    selected = mask_logits[idx, classes.long() - 1]
    return F.binary_cross_entropy_with_logits(
        selected, targets.to(mask_logits.dtype), reduction="mean"
    )


def _check_finite(name: str, value) -> None:
    v = float(value.detach()) if torch.is_tensor(value) else float(value)
    if not math.isfinite(v):
        raise TrainingDiverged("loss component %s is not finite: %r" % (name, v))


def assemble_loss(
    l_cls,
    l_box,
    l_mask,
    aux_losses: Dict[float, object],
    alpha: float,
    aux_weight: float = 1.0,
) -> LossBundle:
    """Combine components; raises TrainingDiverged on any non-finite part."""
    if alpha < 1.0:
        raise TrainingDiverged("alpha must be >= 1, got %r" % alpha)
    _check_finite("l_cls", l_cls)
    _check_finite("l_box", l_box)
    _check_finite("l_mask", l_mask)
    for scale in sorted(aux_losses):
        _check_finite("aux[%g]" % scale, aux_losses[scale])

    mask_side = l_mask
    for scale in sorted(aux_losses):
        mask_side = mask_side + aux_weight * aux_losses[scale]
    total = l_cls + l_box + alpha * mask_side
    _check_finite("total", total)
    return LossBundle(
        l_cls=l_cls,
        l_box=l_box,
        l_mask=l_mask,
        aux_losses=dict(aux_losses),
        alpha=float(alpha),
        aux_weight=float(aux_weight),
        total=total,
    )
