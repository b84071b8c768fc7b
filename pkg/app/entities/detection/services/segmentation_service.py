"""
Detector geométrico: segmentación de dispositivos y baterías sobre la banda HE

Umbral + etiquetado de componentes 4-conexas con scipy.ndimage. Las
máscaras se guardan recortadas a su caja para no duplicar frames completos.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from app.entities.detection.schemas.detection_schemas import BoundingBox, DetectionConfig
from app.entities.xray_sim.schemas.enums import DEVICE_LABEL, BatteryClassEnum
from app.shared.exceptions import EmptyMaskError


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ComponentMask:
    """Componente conexa: máscara booleana recortada y su posición en el frame."""
    rows: slice
    cols: slice
    mask: np.ndarray

    @property
    def area(self) -> int:
        return int(self.mask.sum())

    @property
    def offset(self) -> Tuple[int, int]:
        return self.rows.start, self.cols.start

    def to_full(self, shape: Tuple[int, int]) -> np.ndarray:
        full = np.zeros(shape, dtype=bool)
        full[self.rows, self.cols] = self.mask
        return full

    def bbox(self, label: str = DEVICE_LABEL, score: float = 1.0) -> BoundingBox:
        return mask_to_bbox(self.mask, label=label, score=score, offset=self.offset)


def _components(binary: np.ndarray, min_area: int) -> List[ComponentMask]:
    labeled, count = ndimage.label(binary)
    if count == 0:
        return []
    components = []
    for index, window in enumerate(ndimage.find_objects(labeled), start=1):
        if window is None:
            continue
        mask = labeled[window] == index
        if int(mask.sum()) >= min_area:
            components.append(ComponentMask(rows=window[0], cols=window[1], mask=mask))
    return components


def segment_devices(he8: np.ndarray, cfg: Optional[DetectionConfig] = None) -> List[ComponentMask]:
    """
    Dispositivos = componentes 4-conexas con HE < background_threshold.

    No se suprimen los que tocan el borde del frame.

    Ejemplo:
        segment_devices(np.full((100, 100), 255, dtype=np.uint8))  # []
    """
    cfg = cfg or DetectionConfig()
    return _components(np.asarray(he8) < cfg.background_threshold, cfg.min_area)


def mask_to_bbox(mask: np.ndarray, label: str = DEVICE_LABEL, score: float = 1.0,
                 offset: Tuple[int, int] = (0, 0)) -> BoundingBox:
    """
    Caja de los extremos de la máscara; centro = punto medio entero (redondeo hacia abajo).

    Ejemplo:
        mask[10:20, 20:40] = True
        mask_to_bbox(mask)  # x_center=29, y_center=14, width=20, height=10

    Raises:
        EmptyMaskError: La máscara no tiene pixels
    """
    rows = np.flatnonzero(np.any(mask, axis=1))
    cols = np.flatnonzero(np.any(mask, axis=0))
    if rows.size == 0:
        raise EmptyMaskError()
    r0, r1 = int(rows[0]) + offset[0], int(rows[-1]) + offset[0]
    c0, c1 = int(cols[0]) + offset[1], int(cols[-1]) + offset[1]
    return BoundingBox(
        x_center=(c0 + c1) // 2,
        y_center=(r0 + r1) // 2,
        width=c1 - c0 + 1,
        height=r1 - r0 + 1,
        label=label,
        score=score,
    )


def classify_battery_shape(width_px: float, height_px: float, mm_per_px: float,
                           cfg: Optional[DetectionConfig] = None) -> BatteryClassEnum:
    """
    Regla de forma en mm: alargada → Cylindrical; casi cuadrada y pequeña →
    Button; grande → Pouch; resto → Other.
    """
    cfg = cfg or DetectionConfig()
    long_side = max(width_px, height_px) * mm_per_px
    short_side = min(width_px, height_px) * mm_per_px
    aspect = long_side / short_side
    if aspect >= cfg.cylindrical_aspect:
        return BatteryClassEnum.CYLINDRICAL
    if aspect <= cfg.button_aspect and long_side <= cfg.button_max_side_mm:
        return BatteryClassEnum.BUTTON
    if long_side * short_side >= cfg.pouch_min_area_mm2:
        return BatteryClassEnum.POUCH
    return BatteryClassEnum.OTHER


def detect_batteries(he8: np.ndarray, device_masks: List[ComponentMask], mm_per_px: float,
                     cfg: Optional[DetectionConfig] = None) -> List[BoundingBox]:
    """Baterías = zonas con HE < battery_threshold dentro de cada máscara de dispositivo."""
    cfg = cfg or DetectionConfig()
    he8 = np.asarray(he8)
    boxes = []
    for device in device_masks:
        dark = (he8[device.rows, device.cols] < cfg.battery_threshold) & device.mask
        for component in _components(dark, cfg.min_area):
            row_off = device.rows.start + component.rows.start
            col_off = device.cols.start + component.cols.start
            box = mask_to_bbox(component.mask, offset=(row_off, col_off))
            battery_class = classify_battery_shape(box.width, box.height, mm_per_px, cfg)
            boxes.append(box.model_copy(update={"label": battery_class.value}))
    return boxes
