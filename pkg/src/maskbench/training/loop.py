"""The optimization loop: SGD over one image per step with JSONL metrics.

Sample order, proposal jitter and RoI sampling all draw from one seeded
numpy generator, and model initialization consumes the seeded torch
generator, so a (config, dataset, seed) triple fixes the whole loss trace.
On divergence the loop aborts and leaves the last periodic checkpoint in
place.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch

from ..config import Config
from ..determinism import apply_determinism, deterministic_requested, seed_everything
from ..errors import DatasetError, TrainingDiverged
from .checkpoint import load_checkpoint, save_checkpoint
from .losses import assemble_loss
from .schedule import alpha_schedule, lr_schedule

CHECKPOINT_NAME = "checkpoint.npz"
METRICS_NAME = "metrics.jsonl"


@dataclass
class TrainResult:
    checkpoint_path: str
    metrics_path: str
    steps_run: int
    final_total: float


def train(
    config: Config,
    samples: Sequence,
    out_dir,
    seed: int = 0,
    until_step: Optional[int] = None,
    resume: bool = False,
    model=None,
) -> TrainResult:
    """Train a detector on in-memory samples, writing checkpoint + metrics.

    The loss schedule always spans ``config.training.total_steps``;
    ``until_step`` only bounds how far this call executes, so a run stopped
    partway and resumed later reproduces the uninterrupted loss trace.
    """
    from ..scaffold.detector import Detector

    config.validate()
    if not samples:
        raise DatasetError("training requires a nonempty dataset")
    total_steps = config.training.total_steps
    if until_step is None:
        until_step = total_steps
    until_step = min(until_step, total_steps)
    os.makedirs(out_dir, exist_ok=True)
    checkpoint_path = os.path.join(out_dir, CHECKPOINT_NAME)
    metrics_path = os.path.join(out_dir, METRICS_NAME)

    if deterministic_requested():
        apply_determinism()
    rng = seed_everything(seed)
    if model is None:
        model = Detector(config)
    model.train()
    t = config.training
    det_ids = {id(p) for p in model.detection_head.parameters()}
    groups = [
        {
            "params": [p for p in model.parameters() if id(p) not in det_ids],
            "lr": t.lr,
            "lr_scale": 1.0,
        },
        {
            "params": list(model.detection_head.parameters()),
            "lr": t.lr * t.detection_lr_scale,
            "lr_scale": t.detection_lr_scale,
        },
    ]
    optimizer = torch.optim.SGD(
        groups, momentum=t.momentum, weight_decay=t.weight_decay
    )

    start_step = 0
    if resume and os.path.exists(checkpoint_path):
        manifest = load_checkpoint(
            checkpoint_path, model, optimizer, restore_rng=True, rng=rng
        )
        start_step = int(manifest["step"])
    metrics = open(metrics_path, "a" if start_step else "w")

    accum = max(1, t.grad_accumulation)
    final_total = float("nan")
    step = start_step
    try:
        optimizer.zero_grad()
        while step < until_step:
            idx = int(rng.integers(0, len(samples)))
            sample = samples[idx]
            alpha = alpha_schedule(
                step, total_steps, t.alpha_early, t.switch_fraction
            )
            t0 = time.time()
            components = model.forward_train(sample.image, sample.annotations, rng)
            if components is None:
                record = {"step": step, "skipped": True, "image_id": sample.image_id}
                metrics.write(json.dumps(record) + "\n")
                metrics.flush()
                step += 1
                continue
            bundle = assemble_loss(
                components["l_cls"],
                components["l_box"],
                components["l_mask"],
                components["aux_losses"],
                alpha,
                config.heads.quasi_multitask.aux_loss_weight,
            )
            (bundle.total / accum).backward()
            if (step + 1) % accum == 0:
                if t.grad_clip > 0:
                    torch.nn.utils.clip_grad_norm_(model.parameters(), t.grad_clip)
                lr_now = lr_schedule(
                    step, total_steps, t.lr, t.lr_decay_fraction, t.lr_decay_factor
                )
                for group in optimizer.param_groups:
                    group["lr"] = lr_now * group["lr_scale"]
                optimizer.step()
                optimizer.zero_grad()

            record = {"step": step, "image_id": sample.image_id}
            record.update(bundle.to_floats())
            record["num_rois"] = components["num_rois"]
            record["num_foreground"] = components["num_foreground"]
            record["wall_time"] = time.time() - t0
            metrics.write(json.dumps(record) + "\n")
            metrics.flush()
            final_total = record["total"]
            step += 1
            if step % t.checkpoint_interval == 0 or step == until_step:
                save_checkpoint(checkpoint_path, model, optimizer, step, seed, rng)
    except TrainingDiverged:
        # keep the last periodic checkpoint; surface the failure to callers
        metrics.write(json.dumps({"step": step, "diverged": True}) + "\n")
        metrics.close()
        raise
    metrics.close()
    if step == start_step:
        save_checkpoint(checkpoint_path, model, optimizer, step, seed, rng)
    return TrainResult(
        checkpoint_path=checkpoint_path,
        metrics_path=metrics_path,
        steps_run=step - start_step,
        final_total=final_total,
    )


def read_metrics(path) -> list:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
