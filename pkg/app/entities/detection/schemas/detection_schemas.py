"""
Schemas de detección: cajas, informes por dispositivo, registros por frame y métricas

Convención de imagen: x = columna (a lo ancho de la cinta), y = fila (en
la dirección de avance). Los bordes de una caja son centro ± tamaño/2.
"""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, computed_field, field_validator

from app.shared.validators import validate_positive, validate_range, validate_unit_interval


class DetectorModeEnum(str, Enum):
    """Proveedor de detecciones del escenario."""
    ORACLE = "oracle"
    STANDIN = "standin"


class BoundingBox(BaseModel):
    """
    Caja alineada a ejes en pixels del frame.

    Ejemplo:
        BoundingBox(x_center=29, y_center=14, width=20, height=10, label="device")
    """
    model_config = ConfigDict(frozen=True)

    x_center: float
    y_center: float
    width: float
    height: float
    label: str
    score: float = 1.0

    @field_validator("width", "height")
    @classmethod
    def validate_size(cls, v, info: ValidationInfo):
        return validate_positive(v, info.field_name)

    @field_validator("score")
    @classmethod
    def validate_score(cls, v):
        return validate_unit_interval(v, "score")

    @classmethod
    def from_edges(cls, x_min: float, y_min: float, x_max: float, y_max: float, label: str,
                   score: float = 1.0) -> "BoundingBox":
        return cls(
            x_center=0.5 * (x_min + x_max),
            y_center=0.5 * (y_min + y_max),
            width=x_max - x_min,
            height=y_max - y_min,
            label=label,
            score=score,
        )

    @property
    def x_min(self) -> float:
        return self.x_center - 0.5 * self.width

    @property
    def x_max(self) -> float:
        return self.x_center + 0.5 * self.width

    @property
    def y_min(self) -> float:
        return self.y_center - 0.5 * self.height

    @property
    def y_max(self) -> float:
        return self.y_center + 0.5 * self.height

    @property
    def area(self) -> float:
        return self.width * self.height

    def edges(self) -> Tuple[float, float, float, float]:
        return self.x_min, self.y_min, self.x_max, self.y_max

    def contains_point(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def iou(self, other: "BoundingBox") -> float:
        ix = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        iy = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        if ix <= 0.0 or iy <= 0.0:
            return 0.0
        inter = ix * iy
        return inter / (self.area + other.area - inter)

    def sort_key(self) -> Tuple[float, float, float, float]:
        return self.x_min, self.y_min, self.x_max, self.y_max


class DeviceReport(BaseModel):
    """Dispositivo segmentado con las baterías cuyo centro cae en su caja."""
    device: BoundingBox
    batteries: List[BoundingBox] = Field(default_factory=list)

    @computed_field
    @property
    def has_battery(self) -> bool:
        return bool(self.batteries)


class DetectionRecord(BaseModel):
    """
    Resultado de detección de un frame, con la geometría necesaria para
    pasar de pixels a mm sin volver a leer el frame.
    """
    frame_index: int
    origin: float = Field(..., description="Coordenada de franja (mm) de la fila 0")
    mm_per_px: float
    t_first: float = Field(..., description="Instante de adquisición de la fila 0 (s)")
    row_period: float = Field(..., description="Segundos entre filas consecutivas")
    height: int
    width: int
    devices: List[BoundingBox] = Field(default_factory=list)
    batteries: List[BoundingBox] = Field(default_factory=list)
    reports: List[DeviceReport] = Field(default_factory=list)
    unassigned: List[BoundingBox] = Field(default_factory=list)

    @property
    def t_last(self) -> float:
        return self.t_first + (self.height - 1) * self.row_period


class DetectionConfig(BaseModel):
    """Umbrales del detector geométrico y parámetros de evaluación."""
    model_config = ConfigDict(frozen=True)

    mode: DetectorModeEnum = DetectorModeEnum.ORACLE
    background_threshold: int = Field(250, description="HE < umbral ⇒ dispositivo")
    battery_threshold: int = Field(180, description="HE < umbral dentro de un dispositivo ⇒ batería")
    min_area: int = Field(50, description="Área mínima de componente (px)")
    neighbor_gap_px: float = Field(10.0, description="Separación para fusionar GT vecinos")
    iou_threshold: float = 0.5
    cylindrical_aspect: float = 3.0
    button_aspect: float = 1.5
    button_max_side_mm: float = 20.0
    pouch_min_area_mm2: float = 1500.0

    @field_validator("background_threshold", "battery_threshold")
    @classmethod
    def validate_thresholds(cls, v, info: ValidationInfo):
        return int(validate_range(v, 1, 255, info.field_name))

    @field_validator("min_area")
    @classmethod
    def validate_min_area(cls, v):
        return int(validate_positive(v, "min_area"))

    @field_validator("iou_threshold")
    @classmethod
    def validate_iou(cls, v):
        if not 0.0 < v < 1.0:
            raise ValueError("iou_threshold debe estar en (0, 1)")
        return v

    @field_validator("cylindrical_aspect", "button_aspect", "button_max_side_mm", "pouch_min_area_mm2")
    @classmethod
    def validate_shape_rule(cls, v, info: ValidationInfo):
        return validate_positive(v, info.field_name)


# ==================== MÉTRICAS ====================

class ClassMetrics(BaseModel):
    label: str
    recall: float
    precision: float
    modified_recall: float
    ap50: float
    n_gt: int = 0
    n_pred: int = 0

    @field_validator("recall", "precision", "modified_recall", "ap50")
    @classmethod
    def validate_unit(cls, v, info: ValidationInfo):
        return validate_unit_interval(v, info.field_name)


class MetricsReport(BaseModel):
    """Métricas por clase más el agregado (label "all")."""
    per_class: List[ClassMetrics] = Field(default_factory=list)
    aggregate: Optional[ClassMetrics] = None
