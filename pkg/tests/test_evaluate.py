import itertools
import json

import numpy as np
import pytest

from conftest import REFERENCE_TALLIES
from lenscue.boxes import BoundingBox, iou
from lenscue.evaluate import (
    ClassificationMetrics,
    ConfusionCounts,
    PRCurve,
    _pr_points,
    average_precision,
    classification_metrics,
    evaluate_awareness,
    evaluate_detections,
    match_detections,
    write_pr_csv,
    write_pr_svg,
    write_report_json,
)
from lenscue.records import AccessibilityClass, Annotation, Detection

CRUTCHES = AccessibilityClass.USES_CRUTCHES
WHEELCHAIR = AccessibilityClass.USES_WHEELCHAIR
CLASSES = list(AccessibilityClass)


def det(x1, y1, x2, y2, conf, marker=CRUTCHES):
    return Detection(box=BoundingBox(x1, y1, x2, y2), marker=marker, confidence=conf)


def ann(x1, y1, x2, y2, marker=CRUTCHES):
    return Annotation(box=BoundingBox(x1, y1, x2, y2), marker=marker)


def test_counts_reject_negative():
    with pytest.raises(ValueError):
        ConfusionCounts(tp=-1, fp=0, fn=0)


def test_reference_tallies_metric_triples():
    for (tp, tn, fp, fn), expected in REFERENCE_TALLIES:
        metrics = classification_metrics(ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn))
        assert (
            round(metrics.precision, 3),
            round(metrics.recall, 3),
            round(metrics.f1, 3),
        ) == expected


def test_metrics_undefined_denominators():
    no_predictions = classification_metrics(ConfusionCounts(tp=0, fp=0, fn=5))
    assert no_predictions.precision is None
    assert no_predictions.recall == 0.0
    assert no_predictions.f1 is None
    no_truth = classification_metrics(ConfusionCounts(tp=0, fp=5, fn=0))
    assert no_truth.precision == 0.0
    assert no_truth.recall is None
    assert no_truth.f1 is None
    all_wrong = classification_metrics(ConfusionCounts(tp=0, fp=3, fn=4))
    assert all_wrong.f1 is None


def test_match_visits_by_descending_confidence():
    # the low-confidence detection overlaps the truth best, but the
    # high-confidence one claims it first
    truth = [ann(0, 0, 10, 10)]
    detections = [
        det(0, 0, 9, 10, conf=0.4),
        det(0, 0, 10, 10, conf=0.9),
    ]
    result = match_detections(detections, truth)
    assert result.order == (1, 0)
    assert result.assignments == (0, None)
    assert (result.tp, result.fp, result.fn) == (1, 1, 0)


def test_match_iou_tie_prefers_lower_truth_index():
    truth = [ann(0, 0, 10, 10), ann(0, 0, 10, 10)]
    result = match_detections([det(0, 0, 10, 10, conf=0.8)], truth)
    assert result.assignments == (0,)
    assert result.unmatched_truth == (1,)


def test_match_requires_same_class():
    truth = [ann(0, 0, 10, 10, marker=WHEELCHAIR)]
    result = match_detections([det(0, 0, 10, 10, conf=0.9, marker=CRUTCHES)], truth)
    assert result.assignments == (None,)


def test_match_requires_iou_threshold():
    truth = [ann(0, 0, 10, 10)]
    result = match_detections([det(6, 0, 10, 10, conf=0.9)], truth, iou_threshold=0.5)
    assert result.assignments == (None,)
    assert match_detections([det(5, 0, 10, 10, conf=0.9)], truth).assignments == (0,)


def test_match_threshold_validation():
    with pytest.raises(ValueError):
        match_detections([], [], iou_threshold=0.0)


def _max_tp_exhaustive(detections, truths, threshold):
    """Try every injective assignment; the most true positives achievable."""
    best = 0
    for assign in itertools.product(range(-1, len(truths)), repeat=len(detections)):
        used = [a for a in assign if a >= 0]
        if len(used) != len(set(used)):
            continue
        tp = 0
        valid = True
        for d_i, t_i in enumerate(assign):
            if t_i < 0:
                continue
            d, t = detections[d_i], truths[t_i]
            if d.marker is not t.marker or iou(d.box, t.box) < threshold:
                valid = False
                break
            tp += 1
        if valid:
            best = max(best, tp)
    return best


def _random_instance(rng):
    def rand_box():
        x1, y1 = rng.uniform(0, 8, 2)
        w, h = rng.uniform(1, 8, 2)
        return BoundingBox(round(x1, 1), round(y1, 1), round(x1 + w, 1), round(y1 + h, 1))

    detections = [
        Detection(
            box=rand_box(),
            marker=CLASSES[int(rng.integers(0, 3))],
            confidence=float(np.round(rng.uniform(), 3)),
        )
        for _ in range(int(rng.integers(0, 5)))
    ]
    truths = [
        Annotation(box=rand_box(), marker=CLASSES[int(rng.integers(0, 3))])
        for _ in range(int(rng.integers(0, 4)))
    ]
    return detections, truths


def test_greedy_matches_exhaustive_on_random_instances():
    rng = np.random.default_rng(424242)
    for _ in range(300):
        detections, truths = _random_instance(rng)
        greedy = match_detections(detections, truths, 0.5).tp
        assert greedy == _max_tp_exhaustive(detections, truths, 0.5)


def test_match_tallies_conserve_counts():
    rng = np.random.default_rng(31)
    for _ in range(200):
        detections, truths = _random_instance(rng)
        result = match_detections(detections, truths)
        assert result.tp + result.fp == len(detections)
        assert result.tp + result.fn == len(truths)


def test_pr_points_toy_sequence():
    curve = _pr_points([True, False, True], [0.9, 0.8, 0.7], n_truth=2)
    assert curve.precisions == (1.0, 0.5, 2.0 / 3.0)
    assert curve.recalls == (0.5, 0.5, 1.0)


def test_average_precision_toy_all_point():
    curve = _pr_points([True, False, True], [0.9, 0.8, 0.7], n_truth=2)
    # area under the envelope: 0.5 * 1.0 + 0.5 * (2/3)
    assert average_precision(curve) == pytest.approx(5.0 / 6.0, abs=1e-12)
    assert round(average_precision(curve), 4) == 0.8333


def test_average_precision_toy_eleven_point():
    curve = _pr_points([True, False, True], [0.9, 0.8, 0.7], n_truth=2)
    # envelope is 1.0 up to recall 0.5 (6 sample points) and 2/3 after (5)
    expected = (6 * 1.0 + 5 * (2.0 / 3.0)) / 11.0
    assert average_precision(curve, method="eleven_point") == pytest.approx(expected)


def test_average_precision_unknown_method():
    with pytest.raises(ValueError):
        average_precision(PRCurve((), (), ()), method="roc")


def test_average_precision_empty_curve():
    assert average_precision(PRCurve((), (), ())) == 0.0


def test_perfect_detector_map_is_one():
    samples = []
    for i, marker in enumerate(CLASSES):
        truths = [ann(0, 0, 10, 10, marker=marker), ann(20, 0, 30, 10, marker=marker)]
        detections = [
            det(0, 0, 10, 10, conf=0.9, marker=marker),
            det(20, 0, 30, 10, conf=0.8, marker=marker),
        ]
        samples.append((detections, truths))
    evaluation = evaluate_detections(samples)
    assert evaluation.mean_ap == 1.0
    assert all(ce.ap == 1.0 for ce in evaluation.per_class.values())
    assert evaluation.counts.fp == 0 and evaluation.counts.fn == 0


def test_zero_truth_class_excluded_with_warning(caplog):
    samples = [
        (
            [det(0, 0, 10, 10, conf=0.9), det(0, 0, 10, 10, conf=0.3, marker=WHEELCHAIR)],
            [ann(0, 0, 10, 10)],
        )
    ]
    with caplog.at_level("WARNING"):
        evaluation = evaluate_detections(samples)
    assert WHEELCHAIR not in evaluation.per_class
    assert evaluation.mean_ap == 1.0
    assert any("excluded from mAP" in message for message in caplog.messages)
    # the stray detection still counts as a false positive overall
    assert evaluation.counts.fp == 1


def test_no_truth_at_all_errors():
    with pytest.raises(ValueError):
        evaluate_detections([([det(0, 0, 10, 10, conf=0.9)], [])])


def test_inverted_predictions_swap_confusion_cells():
    pairs = [(True, True), (True, False), (False, True), (False, False), (False, False)]
    forward = evaluate_awareness(pairs)
    inverted = evaluate_awareness([(not p, a) for p, a in pairs])
    assert forward.counts.tp == inverted.counts.fn
    assert forward.counts.fp == inverted.counts.tn
    assert forward.counts.fn == inverted.counts.tp
    assert forward.counts.tn == inverted.counts.fp


def test_awareness_eval_skips_missing_labels():
    result = evaluate_awareness([(True, True), (False, None), (True, None), (False, False)])
    assert result.n_skipped == 2
    assert result.counts.total == 2
    assert result.accuracy == 1.0


def test_awareness_eval_rejects_empty():
    with pytest.raises(ValueError):
        evaluate_awareness([(True, None)])


def test_awareness_eval_rejects_missing_prediction():
    with pytest.raises(ValueError):
        evaluate_awareness([(None, True)])


def _small_evaluation():
    samples = [
        (
            [det(0, 0, 10, 10, conf=0.9), det(40, 40, 50, 50, conf=0.6)],
            [ann(0, 0, 10, 10), ann(20, 20, 30, 30)],
        )
    ]
    return evaluate_detections(samples)


def test_report_json_structure(tmp_path):
    path = tmp_path / "report.json"
    write_report_json(_small_evaluation(), path)
    report = json.loads(path.read_text(encoding="utf-8"))
    assert set(report) == {"map", "precision", "recall", "f1", "counts", "classes"}
    assert report["counts"] == {"tp": 1, "fp": 1, "fn": 1}
    assert report["precision"] == 0.5
    assert CRUTCHES.value in report["classes"]


def test_pr_csv_contents(tmp_path):
    path = tmp_path / "pr.csv"
    write_pr_csv(_pr_points([True, False], [0.9, 0.8], n_truth=1), path)
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "confidence,precision,recall"
    assert lines[1] == "0.900000,1.000000,1.000000"
    assert len(lines) == 3


def test_pr_svg_renders_curves(tmp_path):
    path = tmp_path / "pr.svg"
    evaluation = _small_evaluation()
    write_pr_svg({m.value: ce.curve for m, ce in evaluation.per_class.items()}, path)
    text = path.read_text(encoding="utf-8")
    assert text.startswith("<svg")
    assert "<polyline" in text
    assert CRUTCHES.value in text


def test_metrics_dataclass_is_plain_data():
    metrics = ClassificationMetrics(precision=0.5, recall=0.25, f1=1.0 / 3.0)
    assert metrics.precision == 0.5
