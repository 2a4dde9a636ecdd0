"""Shared test utilities: gradient checking and tiny model configs."""
import numpy as np
import torch

from maskbench.config import Config


def central_diff_grad_check(fn, params, eps=1e-5, rtol=1e-3, atol=1e-8):
    """Compare autograd gradients against central differences.

    ``fn`` maps nothing to a scalar tensor (closing over ``params``);
    every parameter must be float64. Checks each coordinate of each
    parameter tensor; returns the worst relative error seen.
    """
    for p in params:
        assert p.dtype == torch.float64, "gradient checks need float64"
    loss = fn()
    grads = torch.autograd.grad(loss, params, allow_unused=False)
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.detach().reshape(-1)
        gflat = g.detach().reshape(-1)
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + eps
            hi = fn().item()
            flat[i] = orig - eps
            lo = fn().item()
            flat[i] = orig
            numeric = (hi - lo) / (2 * eps)
            analytic = gflat[i].item()
            denom = max(abs(numeric), abs(analytic), atol)
            rel = abs(numeric - analytic) / denom
            worst = max(worst, rel)
            assert rel < rtol or abs(numeric - analytic) < atol, (
                f"grad mismatch at coord {i}: numeric {numeric:.6g} "
                f"analytic {analytic:.6g} rel {rel:.3g}"
            )
    return worst


def tiny_config(**training_overrides):
    """Small float64 config for fast structural tests."""
    cfg = Config()
    cfg.model.stem_channels = 8
    cfg.model.stage_channels = (8, 8, 8, 8)
    cfg.model.pyramid_channels = 8
    cfg.model.mask_conv_channels = 8
    cfg.model.fc_dim = 16
    cfg.heads.contextual_fusion.conv_filters = (8, 8)
    cfg.heads.deconv_pyramid.channels = 8
    cfg.heads.boundary_refinement.inner_filters = 4
    cfg.heads.boundary_refinement.outer_filters = 2
    cfg.sampling.rois_per_image = 8
    cfg.training.total_steps = 10
    cfg.training.checkpoint_interval = 5
    cfg.training.lr = 0.005
    cfg.training.grad_clip = 10.0
    for key, value in training_overrides.items():
        setattr(cfg.training, key, value)
    return cfg.validate()


def random_bitmap(rng, height, width, p=0.4):
    return (rng.random((height, width)) < p).astype(np.uint8)
