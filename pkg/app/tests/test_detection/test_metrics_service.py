import io

import numpy as np
import pytest

from app.entities.detection.schemas.detection_schemas import DetectionRecord
from app.entities.detection.services.metrics_service import (
    AGGREGATE_LABEL,
    METRICS_CSV_COLUMNS,
    average_precision,
    evaluate_records,
    merge_neighbor_gt,
    modified_recall,
    precision_recall_ap,
    write_metrics_csv,
)


def record(frame_index, devices=(), batteries=()):
    return DetectionRecord(frame_index=frame_index, origin=0.0, mm_per_px=0.1, t_first=0.0,
                           row_period=1 / 3500, height=200, width=400,
                           devices=list(devices), batteries=list(batteries))


@pytest.mark.unit
class TestClusters:
    def test_neighbors_merge(self, make_box):
        merged = merge_neighbor_gt([make_box(0, 0, 10, 10), make_box(14, 0, 24, 10)], gap=10)
        assert len(merged) == 1
        assert merged[0].edges() == (0, 0, 24, 10)

    def test_distant_boxes_stay_apart(self, make_box):
        merged = merge_neighbor_gt([make_box(0, 0, 10, 10), make_box(40, 0, 50, 10)], gap=10)
        assert len(merged) == 2

    def test_merge_is_transitive(self, make_box):
        boxes = [make_box(0, 0, 10, 10), make_box(30, 0, 40, 10), make_box(15, 0, 25, 10)]
        assert len(merge_neighbor_gt(boxes, gap=6)) == 1

    def test_gap_is_the_edge_separation(self, make_box):
        assert len(merge_neighbor_gt([make_box(0, 0, 10, 10), make_box(20, 0, 30, 10)], gap=10)) == 1
        assert len(merge_neighbor_gt([make_box(0, 0, 10, 10), make_box(25, 0, 35, 10)], gap=10)) == 2

    def test_merge_is_idempotent(self, make_box):
        rng = np.random.default_rng(11)
        corners = rng.integers(0, 300, size=(25, 2))
        sizes = rng.integers(5, 30, size=(25, 2))
        boxes = [make_box(float(x), float(y), float(x + w), float(y + h), label="Pouch")
                 for (x, y), (w, h) in zip(corners, sizes)]
        once = merge_neighbor_gt(boxes, gap=10)
        twice = merge_neighbor_gt(once, gap=10)
        assert [b.edges() for b in twice] == [b.edges() for b in once]

    def test_chain_fifteen_px_apart_is_stable(self, make_box):
        boxes = [make_box(25 * i, 0, 25 * i + 10, 10) for i in range(3)]
        once = merge_neighbor_gt(boxes, gap=10)
        assert len(once) == 3
        assert merge_neighbor_gt(once, gap=10) == once

    def test_negative_gap(self, make_box):
        with pytest.raises(ValueError):
            merge_neighbor_gt([make_box(0, 0, 1, 1)], gap=-1)


@pytest.mark.unit
class TestScores:
    def test_identical_sets_are_perfect(self, make_box):
        boxes = [make_box(0, 0, 10, 10, label="Pouch"), make_box(50, 50, 70, 60, label="Pouch")]
        assert precision_recall_ap(boxes, boxes) == (1.0, 1.0, 1.0)
        assert modified_recall(boxes, boxes) == 1.0

    def test_cluster_counts_once(self, make_box):
        gt = [make_box(0, 0, 10, 10), make_box(14, 0, 24, 10)]
        pred = [make_box(0, 0, 10, 10)]
        recall, _, _ = precision_recall_ap(pred, gt)
        assert recall == 0.5
        assert modified_recall(pred, gt, gap=10) == 1.0

    def test_spurious_prediction_halves_precision(self, make_box):
        gt = [make_box(0, 0, 10, 10)]
        preds = [make_box(0, 0, 10, 10, score=0.9), make_box(100, 100, 110, 110, score=0.8)]
        recall, precision, ap = precision_recall_ap(preds, gt)
        assert (recall, precision) == (1.0, 0.5)
        assert ap == pytest.approx(1.0)

    def test_no_predictions(self, make_box):
        recall, precision, ap = precision_recall_ap([], [make_box(0, 0, 10, 10)])
        assert (recall, precision, ap) == (0.0, 1.0, 0.0)
        assert modified_recall([], [make_box(0, 0, 10, 10)]) == 0.0

    def test_empty_sets(self):
        assert precision_recall_ap([], []) == (1.0, 1.0, 1.0)
        assert modified_recall([], []) == 1.0

    def test_modified_recall_is_monotone(self, make_box):
        gt = [make_box(0, 0, 10, 10), make_box(14, 0, 24, 10), make_box(100, 100, 120, 120),
              make_box(200, 0, 230, 20)]
        preds = [make_box(300, 300, 310, 310), make_box(2, 2, 8, 8), make_box(205, 5, 215, 15),
                 make_box(102, 102, 118, 118)]
        recalls = [modified_recall(preds[:n], gt, gap=10) for n in range(len(preds) + 1)]
        assert recalls == sorted(recalls)
        assert recalls[-1] == 1.0

        extra_clusters = [make_box(400, 400, 410, 410), make_box(500, 0, 520, 10)]
        shrinking = [modified_recall(preds, gt + extra_clusters[:n], gap=10) for n in range(3)]
        assert shrinking == sorted(shrinking, reverse=True)
        assert shrinking[-1] == pytest.approx(3 / 5)

    def test_order_independent(self, make_box):
        gt = [make_box(0, 0, 10, 10), make_box(2, 0, 12, 10)]
        preds = [make_box(1, 0, 11, 10), make_box(0, 0, 10, 10)]
        assert precision_recall_ap(preds, gt) == precision_recall_ap(preds[::-1], gt[::-1])

    def test_invalid_iou_threshold(self, make_box):
        with pytest.raises(ValueError):
            precision_recall_ap([], [], iou_threshold=1.0)

    def test_average_precision_low_ranked_hit(self):
        # FP con mayor score que el único TP: precisión 0.5 en recall 1
        assert average_precision(np.array([False, True]), 1) == pytest.approx(0.5)


@pytest.mark.unit
class TestRecordEvaluation:
    def test_per_class_and_aggregate(self, make_box):
        device = make_box(0, 0, 100, 100)
        pouch = make_box(10, 10, 40, 40, label="Pouch")
        button = make_box(60, 60, 70, 70, label="Button")
        gt = [record(0, [device], [pouch, button])]
        preds = [record(0, [device], [pouch])]

        report = evaluate_records(preds, gt)
        by_label = {m.label: m for m in report.per_class}
        assert by_label["device"].recall == 1.0
        assert by_label["Pouch"].recall == 1.0
        assert by_label["Button"].recall == 0.0
        assert by_label["Cylindrical"].n_gt == 0 and by_label["Cylindrical"].recall == 1.0
        assert report.aggregate.label == AGGREGATE_LABEL
        assert report.aggregate.recall == 0.5
        assert report.aggregate.precision == 1.0

    def test_frames_do_not_cross_match(self, make_box):
        box = make_box(0, 0, 10, 10, label="Pouch")
        report = evaluate_records([record(1, batteries=[box])], [record(0, batteries=[box])])
        assert report.aggregate.recall == 0.0
        assert report.aggregate.modified_recall == 0.0

    def test_csv_layout(self, make_box):
        device = make_box(0, 0, 100, 100)
        report = evaluate_records([record(0, [device])], [record(0, [device])])
        stream = io.StringIO()
        write_metrics_csv(report, stream)
        lines = stream.getvalue().splitlines()
        assert lines[0].split(",") == METRICS_CSV_COLUMNS
        assert len(lines) == 1 + 5 + 1
        assert lines[1] == "device,1.000000,1.000000,1.000000,1.000000"
        assert lines[-1].startswith(AGGREGATE_LABEL + ",")
