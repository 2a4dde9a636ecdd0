"""Seeding and deterministic-kernel selection.

Setting MASKPLUS_DETERMINISTIC=1 forces deterministic kernels wherever the
math substrate offers a choice; seeding alone already makes desk-scale CPU
runs reproducible.
"""
import os

import numpy as np
import torch

DETERMINISTIC_ENV = "MASKPLUS_DETERMINISTIC"


def deterministic_requested():
    return os.environ.get(DETERMINISTIC_ENV) == "1"


def apply_determinism():
    # Thread count changes reduction partitioning for some CPU kernels, so
    # deterministic mode also pins the intra-op pool to one thread.
    if deterministic_requested():
        torch.use_deterministic_algorithms(True)
        torch.set_num_threads(1)


def seed_everything(seed):
    """Seed torch and return a dedicated numpy Generator for sampling."""
    torch.manual_seed(seed)
    return np.random.default_rng(seed)
