"""
Schemas de seguimiento sobre la cinta y planificación de recogidas

Marcos de referencia:
- Cinta: x en el sentido de avance con origen en la línea del detector,
  y a lo ancho de la cinta (0..belt_width).
- Robot: el de la cinta trasladado por (robot_center_x, robot_center_y);
  el plano de la cinta está en z = belt_z.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

from app.shared.validators import validate_non_negative, validate_positive


DEFAULT_PLACE_POINT = (0.0, -400.0, -900.0)


class TrackingConfig(BaseModel):
    """
    Parámetros del lado de visión: encoder, deduplicación y ventana de recogida.

    Ejemplo:
        TrackingConfig(min_lead_s=0.3, reach_mm=400.0)
    """
    model_config = ConfigDict(frozen=True)

    ticks_per_mm: float = Field(10.0, description="Resolución del encoder")
    encoder_sample_hz: float = Field(100.0, description="Frecuencia de muestreo del encoder")
    speed_window_s: float = Field(1.0, description="Ventana de estimación de velocidad")
    use_encoder: bool = Field(True, description="False: velocidad nominal exacta")
    dedup_mm: float = Field(5.0, description="Distancia bajo la cual dos detecciones son el mismo objeto")
    edge_margin_px: float = Field(1.0, description="Cajas a menos de este margen del borde se ignoran")
    min_lead_s: float = Field(0.2, description="Antelación mínima de una orden respecto a ahora")
    robot_center_x: float = Field(2000.0, description="Distancia del robot aguas abajo del detector (mm)")
    robot_center_y: float = Field(400.0, description="Posición transversal del eje del robot (mm)")
    reach_mm: float = Field(450.0, description="Radio del disco de alcance sobre la cinta")
    belt_z: float = Field(-900.0, description="Plano de la cinta en el marco del robot (mm)")

    @field_validator("ticks_per_mm", "encoder_sample_hz", "speed_window_s", "reach_mm")
    @classmethod
    def validate_positive_fields(cls, v, info: ValidationInfo):
        return validate_positive(v, info.field_name)

    @field_validator("dedup_mm", "edge_margin_px", "min_lead_s")
    @classmethod
    def validate_non_negative_fields(cls, v, info: ValidationInfo):
        return validate_non_negative(v, info.field_name)

    @model_validator(mode="after")
    def validate_sampling(self):
        if self.speed_window_s * self.encoder_sample_hz < 1.0:
            raise ValueError("speed_window_s debe abarcar al menos una muestra del encoder")
        return self


@dataclass(frozen=True)
class WorldItem:
    """Objeto detectado, en el marco de la cinta en el instante t0."""
    id: str
    x0: float
    y0: float
    width: float
    height: float
    v: float
    t0: float
    has_battery: bool
    frame_index: int = -1

    def position_at(self, t: float) -> Tuple[float, float]:
        return self.x0 + self.v * (t - self.t0), self.y0


@dataclass(frozen=True)
class PickCommand:
    """
    Orden de recogida: punto previsto en el marco del robot en t_pick.

    width es la extensión transversal y height la longitudinal del dispositivo (mm).
    """
    item_id: str
    pick_point: Tuple[float, float, float]
    t_pick: float
    place_point: Tuple[float, float, float]
    width: float
    height: float


class SchedulingDecision(BaseModel):
    """Fila del registro de decisiones del planificador."""
    item_id: str
    x0: float
    y0: float
    v: float
    t_pick: Optional[float] = None
    status: str

    @field_validator("status")
    @classmethod
    def validate_status(cls, v):
        if not v:
            raise ValueError("status no puede estar vacío")
        return v
