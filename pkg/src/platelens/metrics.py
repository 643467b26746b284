"""Detection and classifier evaluation math.

Regions are either :class:`~platelens.geometry.BBox` (continuous-area IoU) or
bool mask arrays (pixel-set IoU); the two kinds never mix in one comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidComparisonError, InvalidInputError
from .geometry import BBox

BCE_EPS = 1e-7

MAP_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))

HEAD_CLASSES = {
    "type": ("ENT", "FRAG"),
    "position": ("TOP", "BOTTOM"),
    "rotation": ("LEFT", "RIGHT"),
}


@dataclass
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass
class PrCurve:
    """Operating points of a score-descending sweep plus interpolated AP."""

    points: list = field(default_factory=list)  # (recall, precision)
    ap: float = 0.0


@dataclass
class HeadEval:
    """Binary confusion for one classification head."""

    head: str
    classes: tuple
    confusion: dict  # confusion[actual][predicted] -> count
    per_class: dict  # class -> {"precision": p, "recall": r}

    @property
    def total(self) -> int:
        return sum(sum(row.values()) for row in self.confusion.values())


def iou(a, b) -> float:
    """Intersection over union of two same-kind regions; both empty -> 1.0."""
    a_box = isinstance(a, BBox)
    b_box = isinstance(b, BBox)
    if a_box != b_box:
        raise InvalidComparisonError("cannot compare a box with a mask")
    if a_box:
        ix = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
        iy = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
        inter = ix * iy
        union = a.area + b.area - inter
    else:
        if a.shape != b.shape:
            raise InvalidComparisonError(f"mask shapes differ: {a.shape} vs {b.shape}")
        inter = float(np.logical_and(a, b).sum())
        union = float(np.logical_or(a, b).sum())
    if union == 0.0:
        return 1.0
    return inter / union


def _iou_matrix(pred_regions, gt_regions) -> np.ndarray:
    matrix = np.zeros((len(pred_regions), len(gt_regions)))
    for i, p in enumerate(pred_regions):
        for j, g in enumerate(gt_regions):
            matrix[i, j] = iou(p, g)
    return matrix


def _score_order(scores) -> list[int]:
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))


def _greedy_flags(matrix: np.ndarray, scores, threshold: float) -> list[bool]:
    """TP flag per prediction: greedy highest-IoU matching in score order.

    Ties on score keep insertion order; ties on IoU take the lowest gt index.
    """
    taken = [False] * matrix.shape[1]
    flags = [False] * matrix.shape[0]
    for i in _score_order(scores):
        best_j = -1
        best = -1.0
        for j in range(matrix.shape[1]):
            if not taken[j] and matrix[i, j] > best:
                best = matrix[i, j]
                best_j = j
        if best_j >= 0 and best >= threshold:
            taken[best_j] = True
            flags[i] = True
    return flags


def match_detections(preds, gts, threshold: float):
    """Match scored predictions to ground truths at one IoU threshold.

    ``preds`` is a list of ``(region, score)``; returns ``(MatchCounts,
    flags)`` with one TP/FP flag per prediction in input order.
    """
    if not 0.0 < threshold <= 1.0:
        raise InvalidInputError(f"threshold must be in (0, 1], got {threshold}")
    regions = [r for r, _ in preds]
    scores = [s for _, s in preds]
    flags = _greedy_flags(_iou_matrix(regions, gts), scores, threshold)
    tp = sum(flags)
    return MatchCounts(tp=tp, fp=len(preds) - tp, fn=len(gts) - tp), flags


def precision_recall(counts: MatchCounts) -> tuple[float, float]:
    """Eq. style TP ratios with fixed empty-denominator conventions."""
    if counts.tp + counts.fp == 0:
        precision = 1.0 if counts.fn == 0 else 0.0
    else:
        precision = counts.tp / (counts.tp + counts.fp)
    if counts.tp + counts.fn == 0:
        recall = 1.0
    else:
        recall = counts.tp / (counts.tp + counts.fn)
    return precision, recall


def pr_curve(preds, gts, threshold: float) -> PrCurve:
    """Score-descending sweep accumulating (recall, precision) operating points.

    AP is the 101-point interpolation: mean over r in {0, 0.01, ..., 1} of the
    maximum precision among points with recall >= r.
    """
    if not gts:
        return PrCurve(points=[], ap=1.0 if not preds else 0.0)
    regions = [r for r, _ in preds]
    scores = [s for _, s in preds]
    flags = _greedy_flags(_iou_matrix(regions, gts), scores, threshold)

    points = []
    tp = 0
    for rank, i in enumerate(_score_order(scores), start=1):
        if flags[i]:
            tp += 1
        points.append((tp / len(gts), tp / rank))

    ap = 0.0
    for step in range(101):
        r = step / 100.0
        best = 0.0
        for recall, precision in points:
            if recall >= r and precision > best:
                best = precision
        ap += best
    return PrCurve(points=points, ap=ap / 101.0)


def average_precision(preds, gts, threshold: float) -> float:
    if not 0.0 < threshold <= 1.0:
        raise InvalidInputError(f"threshold must be in (0, 1], got {threshold}")
    return pr_curve(preds, gts, threshold).ap


def map_metrics(preds, gts) -> dict:
    """mAP at 0.5 plus the 10-threshold 0.50:0.95 average (single class)."""
    per_threshold = [average_precision(preds, gts, t) for t in MAP_THRESHOLDS]
    return {
        "map50": per_threshold[0],
        "map50_95": sum(per_threshold) / len(per_threshold),
    }


def confusion(preds, truth, head: str) -> HeadEval:
    """2x2 confusion counts plus per-class precision/recall for one head."""
    if head not in HEAD_CLASSES:
        raise InvalidInputError(f"unknown head {head!r}")
    if len(preds) != len(truth):
        raise InvalidInputError(f"length mismatch: {len(preds)} vs {len(truth)}")
    classes = HEAD_CLASSES[head]
    for label in list(preds) + list(truth):
        if label not in classes:
            raise InvalidInputError(f"label {label!r} not valid for head {head!r}")

    matrix = {actual: {predicted: 0 for predicted in classes} for actual in classes}
    for predicted, actual in zip(preds, truth):
        matrix[actual][predicted] += 1

    per_class = {}
    for positive in classes:
        negative = classes[0] if positive == classes[1] else classes[1]
        counts = MatchCounts(
            tp=matrix[positive][positive],
            fp=matrix[negative][positive],
            fn=matrix[positive][negative],
        )
        p, r = precision_recall(counts)
        per_class[positive] = {"precision": p, "recall": r}
    return HeadEval(head=head, classes=classes, confusion=matrix, per_class=per_class)


def bce(p: float, y: int) -> float:
    """Binary cross-entropy with probability clipping."""
    if y not in (0, 1):
        raise InvalidInputError(f"target must be 0 or 1, got {y}")
    p = min(max(p, BCE_EPS), 1.0 - BCE_EPS)
    return -(y * math.log(p) + (1 - y) * math.log(1.0 - p))


def combined_loss(heads) -> float:
    """Unweighted sum of the three per-head BCE losses."""
    if len(heads) != 3:
        raise InvalidInputError(f"expected 3 heads, got {len(heads)}")
    return sum(bce(p, y) for p, y in heads)
