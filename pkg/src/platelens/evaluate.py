"""Evaluate prediction files against ground-truth files (box or mask mode)."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .detect import load_oracle_predictions
from .errors import InvalidInputError
from .geometry import as_polygon, polygon_bbox, rasterize_polygon
from .metrics import (
    MAP_THRESHOLDS,
    MatchCounts,
    average_precision,
    confusion,
    iou,
    match_detections,
    precision_recall,
)

PR_IOU_THRESHOLD = 0.5  # precision/recall are reported at the mAP50 threshold


def _mask_regions(polygons: list[np.ndarray]) -> list[np.ndarray]:
    """Rasterize page polygons onto one shared canvas sized to fit them all."""
    width = max(2, int(math.ceil(max(p[:, 0].max() for p in polygons))) + 1)
    height = max(2, int(math.ceil(max(p[:, 1].max() for p in polygons))) + 1)
    return [rasterize_polygon(p, width, height) for p in polygons]


def _page_regions(pred_rows, gt_rows, mode: str):
    pred_polys = [as_polygon(r["polygon"]) for r in pred_rows]
    gt_polys = [as_polygon(r["polygon"]) for r in gt_rows]
    if mode == "box":
        preds = [polygon_bbox(p) for p in pred_polys]
        gts = [polygon_bbox(p) for p in gt_polys]
    elif mode == "mask":
        both = pred_polys + gt_polys
        if not both:
            return [], []
        masks = _mask_regions(both)
        preds = masks[: len(pred_polys)]
        gts = masks[len(pred_polys) :]
    else:
        raise InvalidInputError(f"mode must be 'mask' or 'box', got {mode!r}")
    return preds, gts


def evaluate_prediction_files(pred_path: str | Path, gt_path: str | Path, mode: str) -> dict:
    """Aggregate IoU-based metrics across pages of two prediction files.

    Matching happens per page; AP pools the score-ordered predictions of all
    pages (each flagged within its own page), the standard dataset treatment.
    """
    if mode not in ("mask", "box"):
        raise InvalidInputError(f"mode must be 'mask' or 'box', got {mode!r}")
    pred_backend = load_oracle_predictions(pred_path)
    gt_backend = load_oracle_predictions(gt_path)
    page_nos = sorted(set(pred_backend.pages) | set(gt_backend.pages))

    counts = MatchCounts()
    scored_pages = []
    for page_no in page_nos:
        pred_rows = pred_backend.pages.get(page_no, {"detections": []})["detections"]
        gt_rows = gt_backend.pages.get(page_no, {"detections": []})["detections"]
        preds, gts = _page_regions(pred_rows, gt_rows, mode)
        scored = [(region, row["score"]) for region, row in zip(preds, pred_rows)]
        page_counts, _ = match_detections(scored, gts, PR_IOU_THRESHOLD)
        counts.tp += page_counts.tp
        counts.fp += page_counts.fp
        counts.fn += page_counts.fn
        scored_pages.append((scored, gts))

    precision, recall = precision_recall(counts)
    per_threshold = [
        _pooled_average_precision(scored_pages, t) for t in MAP_THRESHOLDS
    ]
    return {
        "map50": round(per_threshold[0], 6),
        "map50_95": round(sum(per_threshold) / len(per_threshold), 6),
        "precision": round(precision, 6),
        "recall": round(recall, 6),
    }


def _pooled_average_precision(scored_pages, threshold: float) -> float:
    """Dataset AP: per-page matching, global score-ordered sweep."""
    flags_scores = []
    total_gts = 0
    for scored, gts in scored_pages:
        total_gts += len(gts)
        _, flags = match_detections(scored, gts, threshold)
        for (region, score), flag in zip(scored, flags):
            flags_scores.append((score, flag))
    if total_gts == 0:
        return 1.0 if not flags_scores else 0.0
    flags_scores.sort(key=lambda r: -r[0])
    points = []
    tp = 0
    for rank, (_, flag) in enumerate(flags_scores, start=1):
        if flag:
            tp += 1
        points.append((tp / total_gts, tp / rank))
    ap = 0.0
    for step in range(101):
        r = step / 100.0
        best = 0.0
        for recall, precision in points:
            if recall >= r and precision > best:
                best = precision
        ap += best
    return ap / 101.0


def evaluate_head_files(pred_path: str | Path, gt_path: str | Path) -> dict:
    """Join two ``id,type,position,rotation`` CSVs on id; per-head confusion."""
    import csv

    def read(path):
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            needed = {"id", "type", "position", "rotation"}
            if not needed.issubset(set(reader.fieldnames or [])):
                raise InvalidInputError(
                    f"{path}: header must contain {sorted(needed)}"
                )
            return {row["id"]: row for row in reader}

    preds = read(pred_path)
    truth = read(gt_path)
    shared = sorted(set(preds) & set(truth))
    if not shared:
        raise InvalidInputError("no shared ids between prediction and truth files")
    out = {"n": len(shared)}
    for head in ("type", "position", "rotation"):
        result = confusion(
            [preds[i][head] for i in shared], [truth[i][head] for i in shared], head
        )
        out[head] = {
            "confusion": result.confusion,
            "per_class": {
                label: {
                    "precision": round(v["precision"], 6),
                    "recall": round(v["recall"], 6),
                }
                for label, v in result.per_class.items()
            },
        }
    return out


__all__ = ["evaluate_prediction_files", "evaluate_head_files", "PR_IOU_THRESHOLD", "iou", "average_precision"]
