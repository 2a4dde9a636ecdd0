"""Weight initialization for the no-norm conv stacks.

Without normalization layers, torch's default conv init attenuates
activations geometrically with depth, leaving the heads with nearly
constant features at the start of training. Kaiming fan-out init keeps
the per-layer variance roughly unit; predictor layers are then re-filled
with small normals by their owners, and additive-tail layers re-zeroed.
"""
from __future__ import annotations

from torch import nn


def kaiming_fill(root: nn.Module) -> None:
    """ReLU-gain kaiming init on every conv / deconv / linear under root."""
    for module in root.modules():
        if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
            nn.init.kaiming_normal_(module.weight, mode="fan_out",
                                    nonlinearity="relu")
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, nn.Linear):
            nn.init.kaiming_normal_(module.weight, nonlinearity="relu")
            nn.init.zeros_(module.bias)


def predictor_fill(layer: nn.Module, std: float = 0.01) -> None:
    """Small-normal fill for final predictor layers (cls / box / logits)."""
    nn.init.normal_(layer.weight, std=std)
    nn.init.zeros_(layer.bias)
