"""Detection and awareness evaluation: matching, PR curves, AP, mAP.

Matching is greedy in descending confidence; ties on IoU go to the truth
box with the lower index. Average precision uses all-point interpolation
(area under the precision envelope) by default, with the legacy 11-point
sampling available as an option.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .boxes import iou
from .records import AccessibilityClass, Annotation, Detection

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary tallies; each prediction or miss lands in exactly one cell."""

    tp: int
    fp: int
    fn: int
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError(f"counts must be non-negative, got {self}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ClassificationMetrics:
    """Precision, recall, F1. A None field means its denominator was zero."""

    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]


def classification_metrics(counts: ConfusionCounts) -> ClassificationMetrics:
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else None
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else None
    if precision is None or recall is None or precision + recall == 0.0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return ClassificationMetrics(precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class MatchResult:
    """Per-detection outcomes for one image, detections in confidence order.

    ``assignments`` holds, for each detection (sorted by descending
    confidence), the matched truth index or None for a false positive.
    """

    order: tuple[int, ...]
    assignments: tuple[Optional[int], ...]
    unmatched_truth: tuple[int, ...]

    @property
    def tp(self) -> int:
        return sum(1 for a in self.assignments if a is not None)

    @property
    def fp(self) -> int:
        return sum(1 for a in self.assignments if a is None)

    @property
    def fn(self) -> int:
        return len(self.unmatched_truth)


def match_detections(
    detections: Sequence[Detection],
    truths: Sequence[Annotation],
    iou_threshold: float = 0.5,
) -> MatchResult:
    """Greedily assign detections to ground-truth boxes of the same class.

    Detections are visited in descending confidence (stable for equal
    confidence). Each claims the unmatched same-class truth with the
    highest IoU at or above the threshold, if any.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].confidence, i))
    taken = [False] * len(truths)
    assignments: list[Optional[int]] = []
    for det_index in order:
        det = detections[det_index]
        best: Optional[int] = None
        best_iou = 0.0
        for t_index, truth in enumerate(truths):
            if taken[t_index] or truth.marker is not det.marker:
                continue
            overlap = iou(det.box, truth.box)
            if overlap >= iou_threshold and overlap > best_iou:
                best = t_index
                best_iou = overlap
        if best is not None:
            taken[best] = True
        assignments.append(best)
    unmatched = tuple(i for i, used in enumerate(taken) if not used)
    return MatchResult(order=tuple(order), assignments=tuple(assignments), unmatched_truth=unmatched)


@dataclass(frozen=True)
class PRCurve:
    """Precision and recall after each detection, in descending confidence."""

    confidences: tuple[float, ...]
    precisions: tuple[float, ...]
    recalls: tuple[float, ...]

    def __post_init__(self):
        if not len(self.confidences) == len(self.precisions) == len(self.recalls):
            raise ValueError("PR curve arrays must have equal length")


def _pr_points(
    flags: Sequence[bool], confidences: Sequence[float], n_truth: int
) -> PRCurve:
    order = sorted(range(len(flags)), key=lambda i: (-confidences[i], i))
    tp = 0
    precisions, recalls, confs = [], [], []
    for rank, i in enumerate(order, start=1):
        tp += bool(flags[i])
        precisions.append(tp / rank)
        recalls.append(tp / n_truth if n_truth else 0.0)
        confs.append(confidences[i])
    return PRCurve(
        confidences=tuple(confs), precisions=tuple(precisions), recalls=tuple(recalls)
    )


def average_precision(curve: PRCurve, method: str = "all_point") -> float:
    """Area under the PR curve using the monotone precision envelope.

    ``method='eleven_point'`` instead averages the envelope sampled at
    recalls 0.0, 0.1, ..., 1.0.
    """
    if method not in ("all_point", "eleven_point"):
        raise ValueError(f"unknown AP method {method!r}")
    if len(curve.recalls) == 0:
        return 0.0
    recalls = np.concatenate([[0.0], np.asarray(curve.recalls), [1.0]])
    precisions = np.concatenate([[0.0], np.asarray(curve.precisions), [0.0]])
    # envelope: precision at recall r = max precision at any recall >= r
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    if method == "all_point":
        steps = np.where(recalls[1:] != recalls[:-1])[0]
        return float(np.sum((recalls[steps + 1] - recalls[steps]) * envelope[steps + 1]))
    total = 0.0
    for r in np.linspace(0.0, 1.0, 11):
        at_or_above = envelope[recalls >= r - 1e-12]
        total += float(at_or_above.max()) if len(at_or_above) else 0.0
    return total / 11.0


@dataclass(frozen=True)
class ClassEvaluation:
    marker: AccessibilityClass
    curve: PRCurve
    ap: float
    counts: ConfusionCounts
    n_truth: int


@dataclass(frozen=True)
class DetectionEvaluation:
    per_class: Mapping[AccessibilityClass, ClassEvaluation]
    mean_ap: float
    counts: ConfusionCounts

    @property
    def metrics(self) -> ClassificationMetrics:
        return classification_metrics(self.counts)


def evaluate_detections(
    samples: Sequence[tuple[Sequence[Detection], Sequence[Annotation]]],
    iou_threshold: float = 0.5,
    ap_method: str = "all_point",
) -> DetectionEvaluation:
    """Match per image, pool detections per class, report AP and mAP.

    Classes with no ground-truth box anywhere are excluded from the mean
    with a warning; their detections still count as false positives in
    the pooled confusion counts.
    """
    # flags/confidences pooled across images, keyed by class
    flags: dict[AccessibilityClass, list[bool]] = {m: [] for m in AccessibilityClass}
    confs: dict[AccessibilityClass, list[float]] = {m: [] for m in AccessibilityClass}
    n_truth = {m: 0 for m in AccessibilityClass}
    tp = fp = fn = 0
    for detections, truths in samples:
        result = match_detections(detections, truths, iou_threshold)
        tp += result.tp
        fp += result.fp
        fn += result.fn
        for det_index, assigned in zip(result.order, result.assignments):
            det = detections[det_index]
            flags[det.marker].append(assigned is not None)
            confs[det.marker].append(det.confidence)
        for truth in truths:
            n_truth[truth.marker] += 1

    per_class: dict[AccessibilityClass, ClassEvaluation] = {}
    aps = []
    for marker in AccessibilityClass:
        if n_truth[marker] == 0:
            if flags[marker]:
                logger.warning(
                    "class %s has %d detections but no ground truth; excluded from mAP",
                    marker.value,
                    len(flags[marker]),
                )
            continue
        curve = _pr_points(flags[marker], confs[marker], n_truth[marker])
        ap = average_precision(curve, ap_method)
        cls_tp = sum(flags[marker])
        cls_fp = len(flags[marker]) - cls_tp
        counts = ConfusionCounts(tp=cls_tp, fp=cls_fp, fn=n_truth[marker] - cls_tp)
        per_class[marker] = ClassEvaluation(
            marker=marker, curve=curve, ap=ap, counts=counts, n_truth=n_truth[marker]
        )
        aps.append(ap)
    if not aps:
        raise ValueError("no class has any ground-truth box; nothing to evaluate")
    return DetectionEvaluation(
        per_class=per_class,
        mean_ap=float(sum(aps) / len(aps)),
        counts=ConfusionCounts(tp=tp, fp=fp, fn=fn),
    )


@dataclass(frozen=True)
class AwarenessEvaluation:
    counts: ConfusionCounts
    metrics: ClassificationMetrics
    accuracy: float
    n_skipped: int


def evaluate_awareness(
    pairs: Iterable[tuple[Optional[bool], Optional[bool]]],
) -> AwarenessEvaluation:
    """Score predicted aware/not-aware against labels; positive class is aware.

    Pairs with a None ground truth are skipped and counted. Errors if no
    labeled pair remains.
    """
    tp = fp = fn = tn = skipped = 0
    for predicted, actual in pairs:
        if actual is None:
            skipped += 1
            continue
        if predicted is None:
            raise ValueError("prediction missing for a labeled example")
        if predicted and actual:
            tp += 1
        elif predicted and not actual:
            fp += 1
        elif not predicted and actual:
            fn += 1
        else:
            tn += 1
    counts = ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)
    if counts.total == 0:
        raise ValueError("no labeled examples to evaluate")
    return AwarenessEvaluation(
        counts=counts,
        metrics=classification_metrics(counts),
        accuracy=(tp + tn) / counts.total,
        n_skipped=skipped,
    )


# --- report writers ---


def _round6(value: Optional[float]) -> Optional[float]:
    return None if value is None else round(value, 6)


def evaluation_report(evaluation: DetectionEvaluation) -> dict:
    metrics = evaluation.metrics
    return {
        "map": _round6(evaluation.mean_ap),
        "precision": _round6(metrics.precision),
        "recall": _round6(metrics.recall),
        "f1": _round6(metrics.f1),
        "counts": {
            "tp": evaluation.counts.tp,
            "fp": evaluation.counts.fp,
            "fn": evaluation.counts.fn,
        },
        "classes": {
            marker.value: {
                "ap": _round6(ce.ap),
                "n_truth": ce.n_truth,
                "tp": ce.counts.tp,
                "fp": ce.counts.fp,
                "fn": ce.counts.fn,
            }
            for marker, ce in evaluation.per_class.items()
        },
    }


def write_report_json(evaluation: DetectionEvaluation, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(evaluation_report(evaluation), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def write_pr_csv(curve: PRCurve, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["confidence", "precision", "recall"])
        for conf, prec, rec in zip(curve.confidences, curve.precisions, curve.recalls):
            writer.writerow([f"{conf:.6f}", f"{prec:.6f}", f"{rec:.6f}"])


def write_pr_svg(
    curves: Mapping[str, PRCurve], path: str | Path, size: int = 400
) -> None:
    """Plot PR curves as a standalone SVG; recall on x, precision on y."""
    margin = 40
    span = size - 2 * margin

    def sx(recall: float) -> float:
        return margin + recall * span

    def sy(precision: float) -> float:
        return size - margin - precision * span

    palette = ["#2a7", "#d44", "#46c", "#a4a", "#c82"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{span}" height="{span}" '
        f'fill="none" stroke="#999"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<text x="{sx(tick):.1f}" y="{size - margin + 16}" font-size="10" '
            f'text-anchor="middle">{tick:g}</text>'
        )
        parts.append(
            f'<text x="{margin - 6}" y="{sy(tick) + 3:.1f}" font-size="10" '
            f'text-anchor="end">{tick:g}</text>'
        )
    for index, (label, curve) in enumerate(sorted(curves.items())):
        if not curve.recalls:
            continue
        color = palette[index % len(palette)]
        points = " ".join(
            f"{sx(r):.2f},{sy(p):.2f}" for r, p in zip(curve.recalls, curve.precisions)
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{margin + 6}" y="{margin + 14 + 14 * index}" font-size="11" '
            f'fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
