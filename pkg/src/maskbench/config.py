"""Structured run configuration.

One YAML file controls every architectural toggle and hyperparameter; the
documented key paths are the dataclass field names below (e.g.
``heads.contextual_fusion.enabled``). ``Config()`` carries the full-scale
reference hyperparameters (lr 0.02, 360k steps, 512 RoIs at 1:3); those are
recorded as defaults but desk-scale runs use :func:`desk_config`.
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError

BOUNDARY_MODES = ("off", "original", "improved")
ALLOWED_AUX_SCALES = (0.5, 2.0)


@dataclass
class ModelConfig:
    num_classes: int = 3
    stem_channels: int = 16
    stage_channels: tuple = (32, 64, 96, 128)
    pyramid_channels: int = 64
    detection_roi_size: int = 7
    mask_roi_size: int = 14
    mask_conv_channels: int = 64
    fc_dim: int = 128
    sampling_ratio: int = 2
    level_k0: int = 1
    level_canonical_scale: float = 56.0
    fusion_source: str = "finest"  # pyramid level feeding context fusion
    dtype: str = "float64"


@dataclass
class FusionConfig:
    enabled: bool = False
    # Final entry must equal pyramid_channels so the additive fusion is
    # well-defined. Full-scale reference stacks: [512, 256, 256] and
    # [720, 512, 512, 256] for 256-channel pyramids.
    conv_filters: tuple = (128, 64, 64)


@dataclass
class DeconvPyramidConfig:
    enabled: bool = False
    depth: int = 2
    channels: int = 64


@dataclass
class BoundaryConfig:
    mode: str = "off"
    num_dense_modules: int = 4
    inner_filters: int = 16
    outer_filters: int = 4


@dataclass
class QuasiConfig:
    scales: tuple = ()
    aux_loss_weight: float = 1.0


@dataclass
class HeadConfig:
    contextual_fusion: FusionConfig = field(default_factory=FusionConfig)
    deconv_pyramid: DeconvPyramidConfig = field(default_factory=DeconvPyramidConfig)
    boundary_refinement: BoundaryConfig = field(default_factory=BoundaryConfig)
    quasi_multitask: QuasiConfig = field(default_factory=QuasiConfig)


@dataclass
class ProposalConfig:
    mode: str = "gt_boxes"  # or "learned"
    jitter: float = 0.0  # uniform box noise, fraction of box size
    topk: int = 100
    nms_threshold: float = 0.7
    objectness_threshold: float = 0.0
    anchor_scale: float = 4.0  # base-box side in units of the level stride


@dataclass
class SamplingConfig:
    rois_per_image: int = 512
    pos_fraction: float = 0.25
    fg_iou_threshold: float = 0.5


@dataclass
class InputConfig:
    # Full-scale resize reference; the desk pipeline feeds fixed-size
    # images and never resizes.
    resize_short: int = 800
    resize_long: int = 1333


@dataclass
class TrainingConfig:
    lr: float = 0.02
    momentum: float = 0.9
    weight_decay: float = 0.0001
    total_steps: int = 360000
    alpha_early: float = 1.5
    switch_fraction: float = 0.5
    grad_accumulation: int = 1
    checkpoint_interval: int = 1000
    grad_clip: float = 0.0  # 0 disables
    lr_decay_fraction: float = 1.0  # step-decay point as a fraction of the run
    lr_decay_factor: float = 0.1
    # The dense mask loss matures the shared features faster than the tiny
    # per-step classification batch can track; a smaller constant rate on
    # the detection head keeps it out of the predict-the-prior trap.
    detection_lr_scale: float = 1.0


@dataclass
class EvalConfig:
    score_threshold: float = 0.05
    nms_threshold: float = 0.5
    max_detections: int = 100
    small_max_area: float = 32.0**2
    medium_max_area: float = 96.0**2


@dataclass
class Config:
    model: ModelConfig = field(default_factory=ModelConfig)
    heads: HeadConfig = field(default_factory=HeadConfig)
    proposals: ProposalConfig = field(default_factory=ProposalConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    input: InputConfig = field(default_factory=InputConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def validate(self):
        m = self.model
        if m.dtype not in ("float32", "float64"):
            raise ConfigError(f"model.dtype must be float32/float64, got {m.dtype}")
        if m.fusion_source not in ("finest", "coarsest"):
            raise ConfigError(
                f"model.fusion_source must be finest/coarsest, got {m.fusion_source}"
            )
        if len(m.stage_channels) < 1:
            raise ConfigError("model.stage_channels must be nonempty")
        if m.mask_roi_size % 2 != 0:
            raise ConfigError("model.mask_roi_size must be even")

        fusion = self.heads.contextual_fusion
        if fusion.enabled:
            if not fusion.conv_filters:
                raise ConfigError("contextual_fusion.conv_filters must be nonempty")
            if fusion.conv_filters[-1] != m.pyramid_channels:
                raise ConfigError(
                    "contextual_fusion.conv_filters must end with the RoI feature "
                    f"channel count {m.pyramid_channels}, got {fusion.conv_filters[-1]}"
                )
        pyramid = self.heads.deconv_pyramid
        if pyramid.enabled:
            if pyramid.depth < 1:
                raise ConfigError("deconv_pyramid.depth must be >= 1")
            if pyramid.channels != m.pyramid_channels:
                raise ConfigError(
                    f"deconv_pyramid.channels must equal the RoI feature channel "
                    f"count {m.pyramid_channels}, got {pyramid.channels}"
                )
        boundary = self.heads.boundary_refinement
        if boundary.mode not in BOUNDARY_MODES:
            raise ConfigError(
                f"boundary_refinement.mode must be one of {BOUNDARY_MODES}, "
                f"got {boundary.mode!r}"
            )
        if boundary.mode == "improved" and boundary.num_dense_modules < 1:
            raise ConfigError("boundary_refinement.num_dense_modules must be >= 1")
        quasi = self.heads.quasi_multitask
        for scale in quasi.scales:
            if scale not in ALLOWED_AUX_SCALES:
                raise ConfigError(
                    f"quasi_multitask.scales may only contain {ALLOWED_AUX_SCALES}, "
                    f"got {scale}"
                )
        if len(set(quasi.scales)) != len(quasi.scales):
            raise ConfigError("quasi_multitask.scales must be unique")
        if quasi.aux_loss_weight < 0:
            raise ConfigError("quasi_multitask.aux_loss_weight must be >= 0")

        if self.proposals.mode not in ("gt_boxes", "learned"):
            raise ConfigError(
                f"proposals.mode must be gt_boxes/learned, got {self.proposals.mode!r}"
            )
        if self.proposals.jitter < 0:
            raise ConfigError("proposals.jitter must be >= 0")
        if self.sampling.rois_per_image < 4:
            raise ConfigError("sampling.rois_per_image must be >= 4")
        if not 0 < self.sampling.pos_fraction <= 1:
            raise ConfigError("sampling.pos_fraction must be in (0, 1]")
        t = self.training
        if t.alpha_early < 1:
            raise ConfigError("training.alpha_early must be >= 1")
        if not 0 <= t.switch_fraction <= 1:
            raise ConfigError("training.switch_fraction must be in [0, 1]")
        if t.grad_accumulation < 1:
            raise ConfigError("training.grad_accumulation must be >= 1")
        if not 0 < t.lr_decay_fraction <= 1:
            raise ConfigError("training.lr_decay_fraction must be in (0, 1]")
        if not 0 < t.lr_decay_factor <= 1:
            raise ConfigError("training.lr_decay_factor must be in (0, 1]")
        if t.detection_lr_scale <= 0:
            raise ConfigError("training.detection_lr_scale must be > 0")
        e = self.eval
        if not 0 < e.small_max_area < e.medium_max_area:
            raise ConfigError("eval size buckets must satisfy 0 < small < medium")
        return self

    def torch_dtype(self):
        import torch

        return torch.float64 if self.model.dtype == "float64" else torch.float32

    def to_dict(self):
        return _as_plain(dataclasses.asdict(self))

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data).validate()

    def to_yaml(self, path):
        with open(path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=False)

    @classmethod
    def from_yaml(cls, path):
        with open(path) as f:
            data = yaml.safe_load(f)
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} did not parse to a mapping")
        return cls.from_dict(data)

    def hash(self):
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()

    def with_overrides(self, overrides):
        """New validated Config with dotted-path overrides applied."""
        data = self.to_dict()
        for path, value in overrides.items():
            node = data
            parts = path.split(".")
            for part in parts[:-1]:
                if part not in node:
                    raise ConfigError(f"unknown config path {path!r}")
                node = node[part]
            if parts[-1] not in node:
                raise ConfigError(f"unknown config path {path!r}")
            node[parts[-1]] = value
        return Config.from_dict(data)


def _as_plain(obj):
    if isinstance(obj, dict):
        return {k: _as_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_as_plain(v) for v in obj]
    return obj


def _build(cls, data):
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping for {cls.__name__}, got {type(data)}")
    kwargs = {}
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r} in {cls.__name__}")
        f = fields[key]
        sub = f.type if isinstance(f.type, type) else None
        if sub is None:
            # from __future__ annotations: resolve by default factory type
            default = (
                f.default_factory() if f.default_factory is not dataclasses.MISSING
                else f.default
            )
            sub = type(default)
        if dataclasses.is_dataclass(sub):
            kwargs[key] = _build(sub, value)
        elif sub is tuple:
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def desk_config():
    """Desk-scale preset: trains in minutes on one CPU core."""
    cfg = Config()
    cfg.training.lr = 0.01
    cfg.training.total_steps = 2000
    cfg.training.checkpoint_interval = 500
    cfg.training.grad_clip = 10.0
    cfg.training.detection_lr_scale = 0.1
    cfg.training.lr_decay_fraction = 5.0 / 6.0
    cfg.sampling.rois_per_image = 64
    cfg.eval.small_max_area = 12.0**2
    cfg.eval.medium_max_area = 24.0**2
    return cfg.validate()


def ablation_config():
    """float32 variant of the desk preset sized for full technique grids.

    Biased training counts as one of the toggled techniques, so the base
    keeps a flat loss weight; the +biased variant raises alpha_early.
    """
    cfg = desk_config()
    cfg.model.dtype = "float32"
    cfg.training.total_steps = 3000
    cfg.training.checkpoint_interval = 1000
    cfg.training.alpha_early = 1.0
    return cfg.validate()


def config_from_file_or_default(path=None):
    if path is None:
        return desk_config()
    return Config.from_yaml(path)


def clone_config(cfg: Config) -> Config:
    return copy.deepcopy(cfg)
