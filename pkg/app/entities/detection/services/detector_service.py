"""
Service Layer de detección por frame

Dos proveedores intercambiables detrás de DetectionProvider:
- OracleDetector: proyecta la escena conocida sobre el frame (verdad terreno)
- StandInDetector: segmentación geométrica sobre los pixels HE

Ambos entregan un DetectionRecord con las baterías ya asignadas a dispositivos.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Protocol, Tuple, Union

from pydantic import TypeAdapter, ValidationError

from app.entities.detection.schemas.detection_schemas import (
    BoundingBox,
    DetectionConfig,
    DetectionRecord,
    DeviceReport,
)
from app.entities.detection.services.segmentation_service import detect_batteries, segment_devices
from app.entities.xray_sim.schemas.enums import DEVICE_LABEL
from app.entities.xray_sim.schemas.xray_schemas import DualEnergyFrame, Scene
from app.shared.exceptions import MalformedInputError


logger = logging.getLogger(__name__)

_RECORDS = TypeAdapter(List[DetectionRecord])


# ==================== VERDAD TERRENO ====================

def _project(x_min: float, x_max: float, y_min: float, y_max: float,
             origin: float, mm_per_px: float, height: int, width: int):
    """Rectángulo en mm → bordes en pixels recortados al frame; None si queda fuera."""
    r0 = (x_min - origin) / mm_per_px
    r1 = (x_max - origin) / mm_per_px
    if r1 <= 0.0 or r0 >= height:
        return None
    c0, c1 = y_min / mm_per_px, y_max / mm_per_px
    r0, r1 = max(r0, 0.0), min(r1, float(height))
    c0, c1 = max(c0, 0.0), min(c1, float(width))
    if r1 <= r0 or c1 <= c0:
        return None
    return c0, r0, c1, r1


def ground_truth_detections(
    scene: Scene,
    origin: float,
    mm_per_px: float,
    height: int,
    width: int,
) -> Tuple[List[BoundingBox], List[BoundingBox]]:
    """
    Proyección exacta de los rectángulos de la escena sobre la ventana del frame.

    Ejemplo:
        # dispositivo en x ∈ [100, 150] mm, frame con origen 0 a 0.1 mm/px
        devices, _ = ground_truth_detections(scene, 0.0, 0.1, 3500, 8000)
        # devices[0].y_min == 1000, devices[0].y_max == 1500
    """
    devices, batteries = [], []
    for device in scene.devices:
        edges = _project(device.x_min, device.x_max, device.y_min, device.y_max,
                         origin, mm_per_px, height, width)
        if edges is None:
            continue
        devices.append(BoundingBox.from_edges(*edges, label=DEVICE_LABEL))
        for battery in device.batteries:
            edges = _project(battery.x_min, battery.x_max, battery.y_min, battery.y_max,
                             origin, mm_per_px, height, width)
            if edges is not None:
                batteries.append(BoundingBox.from_edges(*edges, label=battery.battery_class.value))
    return devices, batteries


# ==================== ASIGNACIÓN ====================

def match_batteries_to_devices(
    batteries: List[BoundingBox],
    devices: List[BoundingBox],
) -> Tuple[List[DeviceReport], List[BoundingBox]]:
    """
    Asigna cada batería al dispositivo que contiene su centro; entre cajas
    anidadas gana la de menor área.

    Returns:
        (un DeviceReport por dispositivo en el orden de entrada, baterías sin asignar)
    """
    assigned: List[List[BoundingBox]] = [[] for _ in devices]
    unassigned = []
    for battery in batteries:
        containers = [
            i for i, device in enumerate(devices)
            if device.contains_point(battery.x_center, battery.y_center)
        ]
        if not containers:
            unassigned.append(battery)
            continue
        best = min(containers, key=lambda i: (devices[i].area, devices[i].sort_key()))
        assigned[best].append(battery)
    reports = [DeviceReport(device=device, batteries=found) for device, found in zip(devices, assigned)]
    return reports, unassigned


def build_record(frame: DualEnergyFrame, devices: List[BoundingBox],
                 batteries: List[BoundingBox]) -> DetectionRecord:
    reports, unassigned = match_batteries_to_devices(batteries, devices)
    return DetectionRecord(
        frame_index=frame.frame_index,
        origin=frame.origin,
        mm_per_px=frame.mm_per_px,
        t_first=frame.t_first,
        row_period=frame.row_period,
        height=frame.height,
        width=frame.width,
        devices=devices,
        batteries=batteries,
        reports=reports,
        unassigned=unassigned,
    )


# ==================== PROVEEDORES ====================

class DetectionProvider(Protocol):
    def detect_frame(self, frame: DualEnergyFrame) -> DetectionRecord:
        ...


class OracleDetector:
    """Detecciones perfectas a partir de la escena; nunca lee los pixels."""

    def __init__(self, scene: Scene):
        self.scene = scene

    def detect_frame(self, frame: DualEnergyFrame) -> DetectionRecord:
        devices, batteries = ground_truth_detections(
            self.scene, frame.origin, frame.mm_per_px, frame.height, frame.width
        )
        return build_record(frame, devices, batteries)


class StandInDetector:
    """Sustituto geométrico de los modelos de segmentación y detección."""

    def __init__(self, cfg: Optional[DetectionConfig] = None):
        self.cfg = cfg or DetectionConfig()

    def detect_frame(self, frame: DualEnergyFrame) -> DetectionRecord:
        masks = segment_devices(frame.he, self.cfg)
        devices = [mask.bbox() for mask in masks]
        batteries = detect_batteries(frame.he, masks, frame.mm_per_px, self.cfg)
        logger.debug("Frame %d: %d dispositivos, %d baterías", frame.frame_index, len(devices), len(batteries))
        return build_record(frame, devices, batteries)


# ==================== PERSISTENCIA ====================

def save_records(records: Iterable[DetectionRecord], path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    payload = [record.model_dump(mode="json") for record in records]
    target.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return target


def load_records(path: Union[str, Path]) -> List[DetectionRecord]:
    """
    Raises:
        MalformedInputError: Archivo inexistente, JSON inválido o registros fuera de schema
    """
    source = Path(path)
    try:
        return _RECORDS.validate_json(source.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise MalformedInputError(str(source), "archivo inexistente")
    except ValidationError as e:
        raise MalformedInputError(str(source), str(e))
