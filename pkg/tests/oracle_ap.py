"""Brute-force average-precision oracle.

Written before (and independently of) the library evaluator: plain-python
set arithmetic for overlaps, explicit greedy matching, and a PR sweep that
re-counts true/false positives from scratch at every prefix of the pooled
score ordering. Deliberately slow and obvious.

Shared metric definition (mirrored by the library evaluator):
 - matching runs per (image, category, iou threshold) in stable descending
   score order; a prediction takes the unmatched non-crowd gt of highest
   overlap >= threshold (ties: first gt), else is absorbed by any crowd gt
   with overlap >= threshold, else is a false positive;
 - crowd overlap is intersection over prediction area;
 - size buckets restrict ground truth only: predictions matched to an
   out-of-bucket gt are dropped from the sweep, unmatched predictions stay
   false positives;
 - 101-point interpolated precision, averaged over categories with >= 1
   in-bucket gt, then over thresholds; -1 when no category has a gt.
"""
import math

DEFAULT_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


def pixel_set(mask):
    pts = set()
    for r in range(len(mask)):
        row = mask[r]
        for c in range(len(row)):
            if row[c]:
                pts.add((r, c))
    return pts


def mask_overlap(pred_mask, gt_mask):
    a = pixel_set(pred_mask)
    b = pixel_set(gt_mask)
    inter = len(a & b)
    union = len(a | b)
    return 0.0 if union == 0 else inter / union


def mask_crowd_overlap(pred_mask, gt_mask):
    a = pixel_set(pred_mask)
    b = pixel_set(gt_mask)
    return 0.0 if not a else len(a & b) / len(a)


def box_overlap(a, b):
    ax1, ay1, ax2, ay2 = a
    bx1, by1, bx2, by2 = b
    if ax2 <= ax1 or ay2 <= ay1 or bx2 <= bx1 or by2 <= by1:
        return 0.0
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def box_crowd_overlap(a, b):
    ax1, ay1, ax2, ay2 = a
    bx1, by1, bx2, by2 = b
    area = (ax2 - ax1) * (ay2 - ay1)
    if area <= 0:
        return 0.0
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih / area


def _overlap(pred, gt, task):
    if task == "segm":
        return mask_overlap(pred["mask"], gt["mask"])
    return box_overlap(pred["box"], gt["box"])


def _crowd_overlap(pred, gt, task):
    if task == "segm":
        return mask_crowd_overlap(pred["mask"], gt["mask"])
    return box_crowd_overlap(pred["box"], gt["box"])


def _gt_area(gt, task):
    if task == "segm":
        return len(pixel_set(gt["mask"]))
    x1, y1, x2, y2 = gt["box"]
    return (x2 - x1) * (y2 - y1)


def match_image(preds, gts, threshold, task):
    """Greedy matching for one (image, category) group.

    Returns a list aligned with ``preds`` sorted by stable descending
    score: entries are ("tp", gt_index), ("ignored", None) or ("fp", None).
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i]["score"])
    taken = set()
    flags = [None] * len(preds)
    for i in order:
        best_j, best_ov = None, threshold
        for j, gt in enumerate(gts):
            if gt["iscrowd"] or j in taken:
                continue
            ov = _overlap(preds[i], gt, task)
            if ov > best_ov or (ov == best_ov and best_j is None and ov >= threshold):
                best_j, best_ov = j, ov
        if best_j is not None:
            taken.add(best_j)
            flags[i] = ("tp", best_j)
            continue
        absorbed = False
        for j, gt in enumerate(gts):
            if gt["iscrowd"] and _crowd_overlap(preds[i], gt, task) >= threshold:
                absorbed = True
                break
        flags[i] = ("ignored", None) if absorbed else ("fp", None)
    return flags


def _category_ap(preds, gts, category, threshold, task, bucket):
    """AP for one category at one threshold, restricted to a gt-area bucket.

    ``bucket`` is an (area_min_exclusive, area_max_inclusive_pair) predicate
    function over gt area; returns None when the category has no in-bucket
    non-crowd gt.
    """
    cat_preds = [p for p in preds if p["category_id"] == category]
    cat_gts = [g for g in gts if g["category_id"] == category]

    in_bucket = {}
    n_gt = 0
    image_ids = sorted(
        {p["image_id"] for p in cat_preds} | {g["image_id"] for g in cat_gts}
    )
    for g_idx, gt in enumerate(cat_gts):
        in_bucket[g_idx] = bucket(_gt_area(gt, task))
        if in_bucket[g_idx] and not gt["iscrowd"]:
            n_gt += 1
    if n_gt == 0:
        return None

    # flag every prediction via per-image matching
    entries = []  # (score, order_index, kind) kind in {tp, fp, drop}
    for image_id in image_ids:
        img_pred_idx = [
            i for i, p in enumerate(cat_preds) if p["image_id"] == image_id
        ]
        img_gt_idx = [i for i, g in enumerate(cat_gts) if g["image_id"] == image_id]
        flags = match_image(
            [cat_preds[i] for i in img_pred_idx],
            [cat_gts[i] for i in img_gt_idx],
            threshold,
            task,
        )
        for local_i, (kind, local_j) in enumerate(flags):
            pred = cat_preds[img_pred_idx[local_i]]
            if kind == "tp":
                g_idx = img_gt_idx[local_j]
                if cat_gts[g_idx]["iscrowd"] or not in_bucket[g_idx]:
                    kind = "drop"
            elif kind == "ignored":
                kind = "drop"
            entries.append((pred["score"], img_pred_idx[local_i], kind))

    # pooled stable sort by descending score (ties: original list order)
    entries.sort(key=lambda e: (-e[0], e[1]))

    # PR sweep: recount from scratch at each prefix length
    points = []
    for k in range(1, len(entries) + 1):
        tp = sum(1 for e in entries[:k] if e[2] == "tp")
        fp = sum(1 for e in entries[:k] if e[2] == "fp")
        if tp + fp == 0:
            continue
        points.append((tp / n_gt, tp / (tp + fp)))

    total = 0.0
    for step in range(101):
        r = step / 100.0
        best = 0.0
        for recall, precision in points:
            if recall >= r - 1e-12 and precision > best:
                best = precision
        total += best
    return total / 101.0


def oracle_ap_report(preds, gts, task, thresholds=DEFAULT_THRESHOLDS,
                     small_max=32.0**2, medium_max=96.0**2):
    """Full report dict with keys ap, ap50, ap75, ap_s, ap_m, ap_l.

    ``preds``/``gts`` are dicts with keys image_id, category_id, score
    (preds only), box (x1, y1, x2, y2), mask (row-major 0/1 lists), iscrowd
    (gts only).
    """
    categories = sorted({g["category_id"] for g in gts})
    buckets = {
        "all": lambda a: True,
        "s": lambda a: a < small_max,
        "m": lambda a: small_max <= a <= medium_max,
        "l": lambda a: a > medium_max,
    }

    def averaged(threshold_list, bucket):
        per_threshold = []
        for t in threshold_list:
            vals = []
            for c in categories:
                ap = _category_ap(preds, gts, c, t, task, bucket)
                if ap is not None:
                    vals.append(ap)
            if not vals:
                return -1.0
            per_threshold.append(sum(vals) / len(vals))
        return sum(per_threshold) / len(per_threshold)

    return {
        "ap": averaged(list(thresholds), buckets["all"]),
        "ap50": averaged([0.5], buckets["all"]),
        "ap75": averaged([0.75], buckets["all"]),
        "ap_s": averaged(list(thresholds), buckets["s"]),
        "ap_m": averaged(list(thresholds), buckets["m"]),
        "ap_l": averaged(list(thresholds), buckets["l"]),
    }


def random_scenario(rng, task="segm", max_images=6, max_instances=8,
                    num_categories=3, image_size=20):
    """Random small prediction/gt universe for oracle-vs-evaluator tests."""
    n_images = int(rng.integers(1, max_images + 1))
    gts, preds = [], []
    for image_id in range(1, n_images + 1):
        n_gt = int(rng.integers(0, max_instances + 1))
        for _ in range(n_gt):
            x1, y1 = rng.integers(0, image_size - 4, 2)
            w, h = rng.integers(2, image_size // 2, 2)
            x2 = min(image_size, int(x1) + int(w))
            y2 = min(image_size, int(y1) + int(h))
            mask = [[0] * image_size for _ in range(image_size)]
            for r in range(int(y1), y2):
                for c in range(int(x1), x2):
                    mask[r][c] = 1
            gts.append(
                {
                    "image_id": image_id,
                    "category_id": int(rng.integers(1, num_categories + 1)),
                    "box": (float(x1), float(y1), float(x2), float(y2)),
                    "mask": mask,
                    "iscrowd": bool(rng.random() < 0.08),
                }
            )
        n_pred = int(rng.integers(0, max_instances + 1))
        for _ in range(n_pred):
            if gts and rng.random() < 0.7:
                base = gts[int(rng.integers(0, len(gts)))]
                bx1, by1, bx2, by2 = base["box"]
                dx, dy = rng.integers(-3, 4, 2)
                x1 = max(0, int(bx1) + int(dx))
                y1 = max(0, int(by1) + int(dy))
                x2 = min(image_size, int(bx2) + int(dx))
                y2 = min(image_size, int(by2) + int(dy))
                if x2 <= x1 or y2 <= y1:
                    x1, y1, x2, y2 = int(bx1), int(by1), int(bx2), int(by2)
                category = (
                    base["category_id"]
                    if rng.random() < 0.8
                    else int(rng.integers(1, num_categories + 1))
                )
            else:
                x1, y1 = (int(v) for v in rng.integers(0, image_size - 4, 2))
                w, h = (int(v) for v in rng.integers(2, image_size // 2, 2))
                x2 = min(image_size, x1 + w)
                y2 = min(image_size, y1 + h)
                category = int(rng.integers(1, num_categories + 1))
            mask = [[0] * image_size for _ in range(image_size)]
            for r in range(y1, y2):
                for c in range(x1, x2):
                    mask[r][c] = 1
            preds.append(
                {
                    "image_id": image_id,
                    "category_id": category,
                    "score": float(round(rng.random(), 3)),
                    "box": (float(x1), float(y1), float(x2), float(y2)),
                    "mask": mask,
                }
            )
    return preds, gts
