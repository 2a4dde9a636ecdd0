"""Command-line entry points: synth, train, eval, ablate, render.

Exit codes: 0 success, 1 usage error (bad flags or inconsistent
configuration), 2 runtime failure (missing files, mismatched checkpoints,
diverged training). MASKPLUS_DETERMINISTIC=1 pins deterministic kernels
before any command runs.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import Optional

from .ablation import (
    DEFAULT_VARIANTS,
    AblationSpec,
    RunRecord,
    format_grid_table,
    run_grid,
    summarize,
)
from .config import Config, ablation_config, config_from_file_or_default
from .determinism import apply_determinism
from .errors import ConfigError, MaskBenchError


class UsageError(Exception):
    """Bad argument values detected after parsing."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2
    # for runtime failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="maskbench",
        description="Desk-scale instance segmentation workbench.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_synth = sub.add_parser("synth", help="generate a synthetic shapes dataset")
    p_synth.add_argument("--out", required=True, help="output dataset directory")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--count", type=int, default=100, help="number of images")
    p_synth.add_argument("--size", type=int, default=64, help="square image size")
    p_synth.add_argument("--max-instances", type=int, default=4)
    p_synth.add_argument(
        "--force", action="store_true", help="write into a non-empty directory"
    )
    p_synth.set_defaults(func=cmd_synth)

    p_train = sub.add_parser("train", help="train a detector on a dataset")
    p_train.add_argument("--dataset", required=True, help="dataset directory")
    p_train.add_argument("--out", required=True, help="run output directory")
    p_train.add_argument("--config", help="config YAML (default: desk preset)")
    p_train.add_argument(
        "--steps", type=int, help="override the configured total step count"
    )
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument(
        "--resume", action="store_true", help="continue from the run's checkpoint"
    )
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a checkpoint on a dataset")
    p_eval.add_argument("checkpoint", help="checkpoint .npz path")
    p_eval.add_argument("--dataset", required=True, help="dataset directory")
    p_eval.add_argument("--limit", type=int, help="evaluate only the first N images")
    p_eval.add_argument(
        "--json", action="store_true", help="emit machine-readable JSON only"
    )
    p_eval.set_defaults(func=cmd_eval)

    p_abl = sub.add_parser("ablate", help="train and score a variant x seed grid")
    p_abl.add_argument("--dataset", required=True, help="dataset directory")
    p_abl.add_argument("--out", required=True, help="grid output directory")
    p_abl.add_argument(
        "--config",
        help="grid spec YAML (base_config/variants/seeds); default: built-in grid",
    )
    p_abl.add_argument(
        "--seeds", default=None, help="comma-separated seed list, e.g. 0,1,2"
    )
    p_abl.add_argument(
        "--val-count", type=int, default=None,
        help="validation images held out from the end (default: 1/6 of the dataset)",
    )
    p_abl.add_argument(
        "--jobs", type=int, default=1, help="worker processes (default sequential)"
    )
    p_abl.add_argument(
        "--resume", action="store_true", help="skip completed matching runs"
    )
    p_abl.add_argument(
        "--json", action="store_true", help="emit machine-readable JSON only"
    )
    p_abl.set_defaults(func=cmd_ablate)

    p_render = sub.add_parser("render", help="write prediction overlays as PNGs")
    p_render.add_argument("checkpoint", help="checkpoint .npz path")
    p_render.add_argument("--dataset", required=True, help="dataset directory")
    p_render.add_argument("--out", required=True, help="overlay output directory")
    p_render.add_argument("--limit", type=int, help="render only the first N images")
    p_render.add_argument("--no-boxes", action="store_true", help="masks only")
    p_render.add_argument(
        "--no-labels", action="store_true", help="skip category/score text"
    )
    p_render.set_defaults(func=cmd_render)
    return parser


def cmd_synth(args) -> int:
    from .data.synth import dataset_digest, generate_shapes_dataset, save_dataset

    if args.count < 1:
        raise UsageError("--count must be >= 1")
    if args.size < 32:
        raise UsageError("--size must be >= 32")
    if args.max_instances < 1:
        raise UsageError("--max-instances must be >= 1")
    if os.path.isdir(args.out) and os.listdir(args.out) and not args.force:
        raise UsageError(
            "output directory %s is not empty (pass --force to overwrite)" % args.out
        )
    samples = generate_shapes_dataset(
        seed=args.seed,
        count=args.count,
        image_size=args.size,
        max_instances=args.max_instances,
    )
    save_dataset(samples, args.out)
    digest = dataset_digest(args.out)
    print("wrote %d images to %s" % (len(samples), args.out))
    print("digest %s" % digest)
    return 0


def cmd_train(args) -> int:
    from .data import load_dataset_dir
    from .training.loop import train

    config = config_from_file_or_default(args.config)
    if args.steps is not None:
        if args.steps < 1:
            raise UsageError("--steps must be >= 1")
        config = config.with_overrides({"training.total_steps": args.steps})
    samples = load_dataset_dir(args.dataset)
    started = time.time()
    result = train(config, samples, args.out, seed=args.seed, resume=args.resume)
    record = RunRecord(
        variant="train",
        seed=args.seed,
        config_hash=config.hash(),
        run_dir=args.out,
        checkpoint_path=result.checkpoint_path,
        metrics_path=result.metrics_path,
        wall_time=time.time() - started,
        status="ok",
    )
    with open(os.path.join(args.out, "record.json"), "w") as fh:
        json.dump(record.to_dict(), fh, indent=1)
    if result.steps_run:
        print(
            "trained %d steps, final loss %.4f"
            % (result.steps_run, result.final_total)
        )
    else:
        print("checkpoint already at the configured step count")
    print("checkpoint %s" % result.checkpoint_path)
    return 0


def cmd_eval(args) -> int:
    from .data import load_dataset_dir
    from .evaluation.report import format_report_table
    from .evaluation.runner import evaluate_detector
    from .training.checkpoint import build_from_checkpoint

    if not os.path.exists(args.checkpoint):
        raise MaskBenchError("checkpoint not found: %s" % args.checkpoint)
    model, _ = build_from_checkpoint(args.checkpoint)
    samples = load_dataset_dir(args.dataset)
    if args.limit is not None:
        if args.limit < 1:
            raise UsageError("--limit must be >= 1")
        samples = samples[: args.limit]
    reports = evaluate_detector(model, samples, tasks=("segm", "bbox"))
    payload = {task: report.to_dict() for task, report in reports.items()}
    if args.json:
        print(json.dumps(payload, indent=1))
    else:
        print(format_report_table(reports))
        print(json.dumps(payload))
    return 0


def _parse_seeds(raw: Optional[str]):
    if raw is None:
        return None
    try:
        return [int(part) for part in raw.split(",") if part.strip() != ""]
    except ValueError:
        raise UsageError("--seeds must be a comma-separated integer list") from None


def load_grid_spec(path, out_dir) -> AblationSpec:
    """Build an AblationSpec from a YAML grid description.

    Recognized keys: base_config (path, optional), variants (list of
    {name, overrides}), seeds (int list). Missing keys fall back to the
    built-in grid over the default ablation preset.
    """
    import yaml

    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("grid spec %s did not parse to a mapping" % path)
    unknown = set(doc) - {"base_config", "variants", "seeds"}
    if unknown:
        raise ConfigError("unknown grid spec keys: %s" % sorted(unknown))
    base = doc.get("base_config")
    base_config = Config.from_yaml(base) if base else ablation_config()
    variants = DEFAULT_VARIANTS
    if "variants" in doc:
        parsed = []
        for entry in doc["variants"]:
            if not isinstance(entry, dict) or "name" not in entry:
                raise ConfigError(
                    "each variant needs a name and an overrides mapping"
                )
            parsed.append((str(entry["name"]), dict(entry.get("overrides") or {})))
        variants = parsed
    seeds = doc.get("seeds", (0, 1, 2))
    return AblationSpec(
        base_config=base_config,
        variants=variants,
        seeds=list(seeds),
        output_dir=out_dir,
    )


def cmd_ablate(args) -> int:
    from .data import load_dataset_dir

    if args.config:
        spec = load_grid_spec(args.config, args.out)
    else:
        spec = AblationSpec(base_config=ablation_config(), output_dir=args.out)
    seeds = _parse_seeds(args.seeds)
    if seeds is not None:
        spec.seeds = seeds
    spec.validate()
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")

    samples = load_dataset_dir(args.dataset)
    val_count = args.val_count
    if val_count is None:
        val_count = max(1, len(samples) // 6)
    if not 0 < val_count < len(samples):
        raise UsageError(
            "--val-count must leave at least one training image"
        )
    train_samples = samples[:-val_count]
    val_samples = samples[-val_count:]

    def progress(message):
        if not args.json:
            print(message, flush=True)

    records = run_grid(
        spec,
        train_samples,
        val_samples,
        resume=args.resume,
        progress=progress,
        jobs=args.jobs,
    )
    failed = [r for r in records if r.status != "ok"]
    if args.json:
        print(
            json.dumps(
                {
                    "records": [r.to_dict() for r in records],
                    "segm": {
                        variant: {col: list(stats) for col, stats in row.items()}
                        for variant, row in summarize(records, "segm").items()
                    },
                },
                indent=1,
            )
        )
    else:
        print()
        print("segm")
        print(format_grid_table(records, task="segm"))
        print()
        print("bbox")
        print(format_grid_table(records, task="bbox"))
        for record in failed:
            print(
                "failed: %s seed %d: %s" % (record.variant, record.seed, record.error)
            )
    if len(failed) == len(records):
        print("all %d runs failed" % len(records), file=sys.stderr)
        return 2
    return 0


def cmd_render(args) -> int:
    from .data import load_dataset_dir
    from .render import render_dataset
    from .training.checkpoint import build_from_checkpoint

    if not os.path.exists(args.checkpoint):
        raise MaskBenchError("checkpoint not found: %s" % args.checkpoint)
    if args.limit is not None and args.limit < 1:
        raise UsageError("--limit must be >= 1")
    model, _ = build_from_checkpoint(args.checkpoint)
    samples = load_dataset_dir(args.dataset)
    paths = render_dataset(
        model,
        samples,
        args.out,
        limit=args.limit,
        draw_boxes=not args.no_boxes,
        draw_labels=not args.no_labels,
    )
    print("wrote %d overlays to %s" % (len(paths), args.out))
    return 0


def main(argv=None) -> int:
    apply_determinism()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except MaskBenchError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except Exception as exc:  # unexpected, still a runtime failure
        print("internal error: %r" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
