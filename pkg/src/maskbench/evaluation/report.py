"""Serialization and plain-text rendering of evaluation results."""
from __future__ import annotations

import json
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..data.types import BinaryMask
from ..errors import EvaluationError
from .ap import APReport
from .types import Prediction

COLUMNS = ("AP", "AP50", "AP75", "APS", "APM", "APL")
_FIELDS = ("ap", "ap50", "ap75", "ap_s", "ap_m", "ap_l")


def format_report_table(rows: Dict[str, APReport], label: str = "task") -> str:
    """Aligned text table, one row per entry, columns in paper order."""
    width = max([len(label)] + [len(str(k)) for k in rows]) + 2
    header = label.ljust(width) + "".join(c.rjust(9) for c in COLUMNS)
    lines = [header]
    for key, report in rows.items():
        cells = "".join(
            ("%.3f" % getattr(report, f)).rjust(9) for f in _FIELDS
        )
        lines.append(str(key).ljust(width) + cells)
    return "\n".join(lines)


def report_to_json(report: APReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def predictions_to_coco(predictions: Sequence[Prediction]) -> List[dict]:
    """COCO results records: xywh boxes plus uncompressed RLE segmentation."""
    records = []
    for p in predictions:
        x1, y1, x2, y2 = (float(v) for v in p.box)
        rec = {
            "image_id": int(p.image_id),
            "category_id": int(p.category_id),
            "score": float(p.score),
            "bbox": [x1, y1, x2 - x1, y2 - y1],
        }
        if p.mask is not None:
            rec["segmentation"] = p.mask.to_coco()
        records.append(rec)
    return records


def predictions_from_coco(records: Sequence[dict]) -> List[Prediction]:
    preds = []
    for i, rec in enumerate(records):
        for key in ("image_id", "category_id", "score", "bbox"):
            if key not in rec:
                raise EvaluationError(
                    "results record %d is missing field %r" % (i, key)
                )
        x, y, w, h = (float(v) for v in rec["bbox"])
        mask = None
        seg = rec.get("segmentation")
        if seg is not None:
            if (
                not isinstance(seg, dict)
                or "size" not in seg
                or "counts" not in seg
                or not isinstance(seg["counts"], list)
            ):
                raise EvaluationError(
                    "results record %d has a segmentation that is not an "
                    "uncompressed RLE dict" % i
                )
            h_img, w_img = (int(v) for v in seg["size"])
            mask = BinaryMask.from_rle(
                [int(c) for c in seg["counts"]], h_img, w_img
            )
        preds.append(
            Prediction(
                image_id=int(rec["image_id"]),
                category_id=int(rec["category_id"]),
                score=float(rec["score"]),
                box=np.array([x, y, x + w, y + h], dtype=np.float64),
                mask=mask,
            )
        )
    return preds


def save_predictions(predictions: Sequence[Prediction], path) -> None:
    with open(path, "w") as fh:
        json.dump(predictions_to_coco(predictions), fh)
        fh.write("\n")


def load_predictions(path) -> List[Prediction]:
    with open(path) as fh:
        records = json.load(fh)
    if not isinstance(records, list):
        raise EvaluationError("results file must contain a JSON list")
    return predictions_from_coco(records)
