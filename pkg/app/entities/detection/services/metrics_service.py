"""
Métricas de evaluación de detecciones

- recall / precision / AP con emparejamiento voraz por score e IoU
- modified recall: recall a nivel de cluster de GT vecinos, donde basta
  un centro de predicción dentro del cluster para contarlo como acierto

Convenciones: sin GT el recall es 1.0; sin predicciones la precisión es 1.0.
Los empates de score se resuelven por coordenadas, de modo que el
resultado no depende del orden de las listas.
"""

import csv
from collections import defaultdict
from typing import Dict, Hashable, Iterable, List, Sequence, TextIO, Tuple

import numpy as np

from app.entities.detection.schemas.detection_schemas import (
    BoundingBox,
    ClassMetrics,
    DetectionRecord,
    MetricsReport,
)
from app.entities.xray_sim.schemas.enums import BATTERY_CLASSES, DEVICE_LABEL
from app.shared.formatting import format_float


METRICS_CSV_COLUMNS = ["class", "recall", "precision", "modified_recall", "ap50"]
AGGREGATE_LABEL = "all_batteries"

Keyed = Tuple[Hashable, BoundingBox]


# ==================== CLUSTERS ====================

def _are_neighbors(a: Tuple[float, ...], b: Tuple[float, ...], gap: float) -> bool:
    # gap es la separación máxima entre bordes (cada caja crece gap / 2)
    return (a[0] - gap <= b[2] and b[0] - gap <= a[2]
            and a[1] - gap <= b[3] and b[1] - gap <= a[3])


def merge_neighbor_gt(boxes: Sequence[BoundingBox], gap: float) -> List[BoundingBox]:
    """
    Fusiona cajas separadas como mucho `gap` pixels en su unión, hasta punto fijo.

    Ejemplo:
        merge_neighbor_gt([a, b], gap=10)  # a y b a 4 px → una sola caja
    """
    if gap < 0:
        raise ValueError("gap debe ser >= 0")
    clusters = [box.edges() for box in sorted(boxes, key=BoundingBox.sort_key)]
    merged = True
    while merged:
        merged = False
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                if _are_neighbors(clusters[i], clusters[j], gap):
                    a, b = clusters[i], clusters.pop(j)
                    clusters[i] = (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))
                    merged = True
                    break
            if merged:
                break
    label = boxes[0].label if boxes else ""
    return [BoundingBox.from_edges(*edges, label=label) for edges in sorted(clusters)]


def _cluster_hits(preds: Sequence[BoundingBox], gt: Sequence[BoundingBox], gap: float) -> Tuple[int, int]:
    clusters = merge_neighbor_gt(gt, gap)
    hits = sum(
        1 for cluster in clusters
        if any(cluster.contains_point(p.x_center, p.y_center) for p in preds)
    )
    return hits, len(clusters)


def modified_recall(preds: Sequence[BoundingBox], gt: Sequence[BoundingBox], gap: float = 10.0) -> float:
    """
    Ejemplo:
        modified_recall([pred_en_cluster], [gt_a, gt_b_vecina])  # 1.0
        modified_recall([], [])                                   # 1.0
    """
    hits, total = _cluster_hits(preds, gt, gap)
    return 1.0 if total == 0 else hits / total


# ==================== RECALL / PRECISION / AP ====================

def _greedy_match(preds: Sequence[Keyed], gt: Sequence[Keyed], iou_threshold: float) -> np.ndarray:
    """Devuelve un booleano TP por predicción, en orden de score descendente."""
    order = sorted(preds, key=lambda kp: (-kp[1].score, kp[1].sort_key()))
    by_key: Dict[Hashable, List[BoundingBox]] = defaultdict(list)
    for key, box in gt:
        by_key[key].append(box)
    for key in by_key:
        by_key[key].sort(key=BoundingBox.sort_key)
    used = {key: [False] * len(boxes) for key, boxes in by_key.items()}

    flags = np.zeros(len(order), dtype=bool)
    for n, (key, pred) in enumerate(order):
        best, best_iou = -1, iou_threshold
        for i, target in enumerate(by_key.get(key, ())):
            if used[key][i]:
                continue
            overlap = pred.iou(target)
            if overlap >= best_iou and (best < 0 or overlap > best_iou):
                best, best_iou = i, overlap
        if best >= 0:
            used[key][best] = True
            flags[n] = True
    return flags


def average_precision(tp_flags: np.ndarray, n_gt: int) -> float:
    """AP por integración de todos los puntos de la curva precisión-recall."""
    if n_gt == 0:
        return 1.0 if tp_flags.size == 0 else 0.0
    if tp_flags.size == 0:
        return 0.0
    tp = np.cumsum(tp_flags)
    fp = np.cumsum(~tp_flags)
    recall = tp / n_gt
    precision = tp / (tp + fp)
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def _scores(preds: Sequence[Keyed], gt: Sequence[Keyed], iou_threshold: float) -> Tuple[float, float, float]:
    flags = _greedy_match(preds, gt, iou_threshold)
    tp = int(flags.sum())
    recall = 1.0 if not gt else tp / len(gt)
    precision = 1.0 if not preds else tp / len(preds)
    return recall, precision, average_precision(flags, len(gt))


def precision_recall_ap(preds: Sequence[BoundingBox], gt: Sequence[BoundingBox],
                        iou_threshold: float = 0.5) -> Tuple[float, float, float]:
    """
    (recall, precision, ap) de un único conjunto de cajas.

    Ejemplo:
        precision_recall_ap([correcta, espuria], [gt])  # recall 1.0, precision 0.5
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError("iou_threshold debe estar en (0, 1)")
    return _scores([(0, p) for p in preds], [(0, g) for g in gt], iou_threshold)


# ==================== EVALUACIÓN DE REGISTROS ====================

def _class_metrics(label: str, preds: List[Keyed], gt: List[Keyed], gap: float, iou_threshold: float) -> ClassMetrics:
    recall, precision, ap = _scores(preds, gt, iou_threshold)
    hits = total = 0
    frames = {key for key, _ in gt}
    for key in sorted(frames):
        frame_preds = [box for k, box in preds if k == key]
        frame_gt = [box for k, box in gt if k == key]
        h, t = _cluster_hits(frame_preds, frame_gt, gap)
        hits, total = hits + h, total + t
    return ClassMetrics(
        label=label,
        recall=recall,
        precision=precision,
        modified_recall=1.0 if total == 0 else hits / total,
        ap50=ap,
        n_gt=len(gt),
        n_pred=len(preds),
    )


def evaluate_records(
    predictions: Iterable[DetectionRecord],
    ground_truth: Iterable[DetectionRecord],
    gap: float = 10.0,
    iou_threshold: float = 0.5,
) -> MetricsReport:
    """
    Compara registros emparejados por frame_index.

    Las métricas por clase incluyen dispositivos y cada clase de batería;
    el agregado trata todas las baterías como una sola clase.
    """
    def flatten(records) -> List[Keyed]:
        boxes = []
        for record in records:
            boxes.extend((record.frame_index, box) for box in record.devices)
            boxes.extend((record.frame_index, box) for box in record.batteries)
        return boxes

    preds, gt = flatten(predictions), flatten(ground_truth)
    per_class = []
    for label in [DEVICE_LABEL, *BATTERY_CLASSES]:
        class_preds = [(k, b) for k, b in preds if b.label == label]
        class_gt = [(k, b) for k, b in gt if b.label == label]
        per_class.append(_class_metrics(label, class_preds, class_gt, gap, iou_threshold))

    battery_preds = [(k, b) for k, b in preds if b.label != DEVICE_LABEL]
    battery_gt = [(k, b) for k, b in gt if b.label != DEVICE_LABEL]
    aggregate = _class_metrics(AGGREGATE_LABEL, battery_preds, battery_gt, gap, iou_threshold)
    return MetricsReport(per_class=per_class, aggregate=aggregate)


def write_metrics_csv(report: MetricsReport, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(METRICS_CSV_COLUMNS)
    rows = list(report.per_class)
    if report.aggregate is not None:
        rows.append(report.aggregate)
    for row in rows:
        writer.writerow([row.label, *(format_float(v) for v in (row.recall, row.precision, row.modified_recall, row.ap50))])
