"""Biased-training schedule for the mask-loss multiplier."""
from __future__ import annotations

from ..errors import ConfigError


def alpha_schedule(
    step: int,
    total_steps: int,
    alpha_early: float = 1.5,
    switch_fraction: float = 0.5,
) -> float:
    """Mask-loss weight: alpha_early before the switch point, then 1.0.

    The switch happens at step >= switch_fraction * total_steps, so a
    midpoint step is already in the late phase.
    """
    if total_steps < 1:
        raise ConfigError("total_steps must be >= 1, got %d" % total_steps)
    if not 0 <= step <= total_steps:
        raise ConfigError(
            "step must lie in [0, total_steps], got %d/%d" % (step, total_steps)
        )
    if step < switch_fraction * total_steps:
        return float(alpha_early)
    return 1.0


def lr_schedule(
    step: int,
    total_steps: int,
    base_lr: float,
    decay_fraction: float = 1.0,
    decay_factor: float = 0.1,
) -> float:
    """Constant learning rate with one optional step decay.

    decay_fraction = 1.0 means the decay point is never reached.
    """
    if base_lr <= 0:
        raise ConfigError("base_lr must be > 0, got %r" % base_lr)
    if total_steps < 1:
        raise ConfigError("total_steps must be >= 1, got %d" % total_steps)
    if step >= decay_fraction * total_steps:
        return base_lr * decay_factor
    return float(base_lr)
