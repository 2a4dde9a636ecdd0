"""Ablation grids: train/evaluate a variant x seed matrix and summarize.

Each variant is a named override map applied to a base config. Every
(variant, seed) run gets its own directory with the resolved config, the
checkpoint, the loss trace, and a run record; the summary table reports
mean [min, max] across seeds per variant, in the usual AP column layout.
"""
from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .config import Config
from .errors import ConfigError, MaskBenchError

TABLE_COLUMNS = ("AP", "AP50", "AP75", "APS", "APM", "APL")

# One toggled technique per row, mirroring the usual ablation layout.
DEFAULT_VARIANTS: Tuple[Tuple[str, dict], ...] = (
    ("baseline", {}),
    ("+fusion", {"heads.contextual_fusion.enabled": True}),
    ("+pyramid", {"heads.deconv_pyramid.enabled": True}),
    ("+boundary", {"heads.boundary_refinement.mode": "improved"}),
    ("+quasi", {"heads.quasi_multitask.scales": (0.5, 2.0)}),
    ("+biased", {"training.alpha_early": 1.5}),
    (
        "all-on",
        {
            "heads.contextual_fusion.enabled": True,
            "heads.deconv_pyramid.enabled": True,
            "heads.boundary_refinement.mode": "improved",
            "heads.quasi_multitask.scales": (0.5, 2.0),
            "training.alpha_early": 1.5,
        },
    ),
)


@dataclass
class AblationSpec:
    # Either a loaded Config or a path to a config YAML.
    base_config: object
    variants: Sequence[Tuple[str, dict]] = DEFAULT_VARIANTS
    seeds: Sequence[int] = (0, 1, 2)
    output_dir: str = "ablation"

    def validate(self) -> "AblationSpec":
        names = [name for name, _ in self.variants]
        if len(set(names)) != len(names):
            raise ConfigError("variant names must be unique: %r" % (names,))
        if not names:
            raise ConfigError("ablation needs at least one variant")
        if not self.seeds:
            raise ConfigError("ablation needs at least one seed")
        return self

    def resolved_base(self) -> Config:
        if isinstance(self.base_config, str):
            self.base_config = Config.from_yaml(self.base_config)
        return self.base_config

    def variant_config(self, name: str) -> Config:
        for vname, overrides in self.variants:
            if vname == name:
                return self.resolved_base().with_overrides(dict(overrides))
        raise ConfigError("unknown variant %r" % (name,))


@dataclass
class RunRecord:
    variant: str
    seed: int
    config_hash: str
    run_dir: str
    checkpoint_path: Optional[str] = None
    metrics_path: Optional[str] = None
    wall_time: float = 0.0
    status: str = "pending"  # pending / ok / failed
    error: str = ""
    segm: Optional[dict] = None
    bbox: Optional[dict] = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        return cls(**data)


def _variant_dir(output_dir: str, variant: str, seed: int) -> str:
    safe = variant.replace("+", "plus_").replace("/", "_")
    return os.path.join(output_dir, "%s_seed%d" % (safe, seed))


def _record_path(run_dir: str) -> str:
    return os.path.join(run_dir, "record.json")


def load_record(run_dir: str) -> Optional[RunRecord]:
    path = _record_path(run_dir)
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        return RunRecord.from_dict(json.load(fh))


def _save_record(record: RunRecord) -> None:
    os.makedirs(record.run_dir, exist_ok=True)
    with open(_record_path(record.run_dir), "w") as fh:
        json.dump(record.to_dict(), fh, indent=1)


def run_single(
    spec: AblationSpec,
    variant: str,
    seed: int,
    train_samples,
    val_samples,
) -> RunRecord:
    """Train one (variant, seed) cell and evaluate it on the val split."""
    from .evaluation.runner import evaluate_detector
    from .training.checkpoint import build_from_checkpoint
    from .training.loop import train

    config = spec.variant_config(variant)
    run_dir = _variant_dir(spec.output_dir, variant, seed)
    os.makedirs(run_dir, exist_ok=True)
    config.to_yaml(os.path.join(run_dir, "config.yaml"))
    record = RunRecord(
        variant=variant,
        seed=seed,
        config_hash=config.hash(),
        run_dir=run_dir,
    )
    started = time.time()
    try:
        result = train(config, train_samples, run_dir, seed=seed)
        model, _ = build_from_checkpoint(result.checkpoint_path)
        reports = evaluate_detector(model, val_samples, tasks=("segm", "bbox"))
        record.checkpoint_path = result.checkpoint_path
        record.metrics_path = result.metrics_path
        record.segm = reports["segm"].to_dict()
        record.bbox = reports["bbox"].to_dict()
        record.status = "ok"
    except MaskBenchError as exc:
        record.status = "failed"
        record.error = "%s: %s" % (type(exc).__name__, exc)
    record.wall_time = time.time() - started
    _save_record(record)
    return record


def completed_record(spec: AblationSpec, variant: str, seed: int) -> Optional[RunRecord]:
    """A prior successful record for this cell, if its config still matches."""
    run_dir = _variant_dir(spec.output_dir, variant, seed)
    record = load_record(run_dir)
    if record is None or record.status != "ok":
        return None
    if record.config_hash != spec.variant_config(variant).hash():
        return None
    return record


def run_grid(
    spec: AblationSpec,
    train_samples,
    val_samples,
    resume: bool = False,
    progress=None,
    jobs: int = 1,
) -> List[RunRecord]:
    """Run every (variant, seed) cell; failures are recorded, not raised.

    jobs > 1 runs cells in separate worker processes (one run per process,
    each with its own output directory) so per-run determinism is kept.
    """
    spec.validate()
    os.makedirs(spec.output_dir, exist_ok=True)
    cells = [(name, seed) for name, _ in spec.variants for seed in spec.seeds]
    done: Dict[Tuple[str, int], RunRecord] = {}
    pending = []
    for name, seed in cells:
        prior = completed_record(spec, name, seed) if resume else None
        if prior is not None:
            if progress:
                progress("skip %s seed %d (complete)" % (name, seed))
            done[(name, seed)] = prior
        else:
            pending.append((name, seed))

    if jobs > 1 and len(pending) > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(
            max_workers=jobs, initializer=_limit_worker_threads
        ) as pool:
            futures = {
                pool.submit(run_single, spec, name, seed, train_samples, val_samples):
                (name, seed)
                for name, seed in pending
            }
            for future in concurrent.futures.as_completed(futures):
                name, seed = futures[future]
                done[(name, seed)] = future.result()
                if progress:
                    progress("done %s seed %d" % (name, seed))
    else:
        for name, seed in pending:
            if progress:
                progress("run %s seed %d" % (name, seed))
            done[(name, seed)] = run_single(
                spec, name, seed, train_samples, val_samples
            )
    return [done[cell] for cell in cells]


def _limit_worker_threads():
    import torch

    torch.set_num_threads(1)


def summarize(
    records: Sequence[RunRecord], task: str = "segm"
) -> Dict[str, Dict[str, Tuple[float, float, float]]]:
    """Per-variant {column: (mean, min, max)} across successful seeds."""
    by_variant: Dict[str, List[dict]] = {}
    for record in records:
        if record.status != "ok":
            continue
        report = getattr(record, task)
        if report is None:
            continue
        by_variant.setdefault(record.variant, []).append(report)

    key_map = {
        "AP": "ap", "AP50": "ap50", "AP75": "ap75",
        "APS": "ap_s", "APM": "ap_m", "APL": "ap_l",
    }
    summary: Dict[str, Dict[str, Tuple[float, float, float]]] = {}
    for variant, reports in by_variant.items():
        row = {}
        for col in TABLE_COLUMNS:
            values = [rep[key_map[col]] for rep in reports]
            row[col] = (sum(values) / len(values), min(values), max(values))
        summary[variant] = row
    return summary


def format_grid_table(
    records: Sequence[RunRecord], task: str = "segm"
) -> str:
    """Mean [min, max] table, one variant per row, in AP column order."""
    summary = summarize(records, task)
    order = []
    for record in records:
        if record.variant not in order:
            order.append(record.variant)
    lines = []
    header = "%-12s" % "variant" + "".join("%25s" % c for c in TABLE_COLUMNS)
    lines.append(header)
    lines.append("-" * len(header))
    for variant in order:
        if variant not in summary:
            lines.append("%-12s %s" % (variant, "(no successful runs)"))
            continue
        cells = []
        for col in TABLE_COLUMNS:
            mean, lo, hi = summary[variant][col]
            cells.append("%25s" % ("%.3f [%.3f, %.3f]" % (mean, lo, hi)))
        lines.append("%-12s" % variant + "".join(cells))
    return "\n".join(lines)
