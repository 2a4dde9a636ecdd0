"""Single-archive checkpoints: parameters, momentum, manifest.

A checkpoint is one .npz holding every named parameter and buffer, the SGD
momentum buffers, both RNG states, and a JSON manifest with the full config
plus its hash. Loading into a model whose config hash differs is refused:
silently mixing architectures and weights is never recoverable.
"""
from __future__ import annotations

import json
from typing import Optional

import numpy as np
import torch

from ..config import Config
from ..errors import CheckpointError

FORMAT_VERSION = 1


def save_checkpoint(
    path,
    model,
    optimizer: Optional[torch.optim.Optimizer],
    step: int,
    seed: int,
    rng: Optional[np.random.Generator] = None,
) -> None:
    cfg = model.config
    arrays = {}
    for name, param in model.named_parameters():
        arrays["param/" + name] = param.detach().cpu().numpy()
    for name, buf in model.named_buffers():
        arrays["buffer/" + name] = buf.detach().cpu().numpy()
    if optimizer is not None:
        state = optimizer.state
        for name, param in model.named_parameters():
            momentum = state.get(param, {}).get("momentum_buffer")
            if momentum is not None:
                arrays["momentum/" + name] = momentum.detach().cpu().numpy()
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "step": int(step),
        "total_steps": int(cfg.training.total_steps),
        "seed": int(seed),
        "alpha_early": float(cfg.training.alpha_early),
        "switch_fraction": float(cfg.training.switch_fraction),
    }
    if rng is not None:
        manifest["numpy_rng_state"] = rng.bit_generator.state
    arrays["manifest"] = np.frombuffer(
        json.dumps(manifest, sort_keys=True).encode(), dtype=np.uint8
    )
    arrays["torch_rng_state"] = torch.get_rng_state().numpy()
    np.savez(path, **arrays)


def _open_archive(path):
    try:
        return np.load(path, allow_pickle=False)
    except FileNotFoundError:
        raise CheckpointError("checkpoint not found: %s" % path) from None
    except (ValueError, OSError) as exc:
        raise CheckpointError(
            "%s is not a checkpoint archive: %s" % (path, exc)
        ) from None


def read_manifest(path) -> dict:
    with _open_archive(path) as data:
        if "manifest" not in data:
            raise CheckpointError("%s is not a checkpoint archive" % path)
        return json.loads(bytes(data["manifest"].tobytes()).decode())


def load_checkpoint(
    path,
    model,
    optimizer: Optional[torch.optim.Optimizer] = None,
    restore_rng: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> dict:
    """Restore parameters (and optionally optimizer/RNG state) in place.

    Returns the manifest. The model's config hash must match the stored
    one.
    """
    with _open_archive(path) as data:
        if "manifest" not in data:
            raise CheckpointError("%s is not a checkpoint archive" % path)
        manifest = json.loads(bytes(data["manifest"].tobytes()).decode())
        if manifest.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(
                "unsupported checkpoint format %r" % manifest.get("format_version")
            )
        if manifest["config_hash"] != model.config.hash():
            raise CheckpointError(
                "checkpoint config hash %s does not match the model's %s; "
                "refusing to load mismatched architecture/weights"
                % (manifest["config_hash"][:12], model.config.hash()[:12])
            )
        with torch.no_grad():
            for name, param in model.named_parameters():
                key = "param/" + name
                if key not in data:
                    raise CheckpointError("checkpoint is missing %s" % key)
                stored = data[key]
                if tuple(stored.shape) != tuple(param.shape):
                    raise CheckpointError(
                        "shape mismatch for %s: %s vs %s"
                        % (name, stored.shape, tuple(param.shape))
                    )
                param.copy_(torch.as_tensor(stored))
            for name, buf in model.named_buffers():
                key = "buffer/" + name
                if key in data:
                    buf.copy_(torch.as_tensor(data[key]))
        if optimizer is not None:
            for name, param in model.named_parameters():
                key = "momentum/" + name
                if key in data:
                    optimizer.state.setdefault(param, {})["momentum_buffer"] = (
                        torch.as_tensor(data[key].copy())
                    )
        if restore_rng:
            torch.set_rng_state(
                torch.as_tensor(data["torch_rng_state"].copy(), dtype=torch.uint8)
            )
            if rng is not None and "numpy_rng_state" in manifest:
                rng.bit_generator.state = manifest["numpy_rng_state"]
    return manifest


def build_from_checkpoint(path):
    """Construct the recorded model and load its weights.

    Returns (model, manifest). Import is deferred to avoid a package cycle.
    """
    from ..scaffold.detector import Detector

    manifest = read_manifest(path)
    config = Config.from_dict(manifest["config"])
    model = Detector(config)
    load_checkpoint(path, model)
    return model, manifest
