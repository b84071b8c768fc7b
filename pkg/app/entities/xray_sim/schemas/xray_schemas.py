"""
Schemas de la simulación de rayos X de doble energía

Convenciones de geometría:
- Coordenada de franja x (mm): distancia aguas arriba de la línea del
  detector en t = 0. La línea n del escáner corresponde a x = n·pixel_pitch,
  de modo que un objeto en [x_min, x_max) aparece en las filas
  x_min/pitch .. x_max/pitch de la imagen acumulada.
- y (mm): posición transversal sobre la cinta, columna c en y = c·pixel_pitch.
- La posición del objeto en el marco de la cinta (x hacia delante, origen
  en la línea del detector) en el instante t es conveyor_speed·t − x.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

from app.entities.xray_sim.schemas.enums import BatteryClassEnum, NoiseModeEnum
from app.shared.validators import (
    validate_non_empty_string,
    validate_non_negative,
    validate_positive,
    validate_range,
)


MAX_COUNTS = 65535


# ==================== MATERIALES ====================

class Material(BaseModel):
    """
    Material con coeficientes de atenuación lineal por banda (1/mm).

    Ejemplo:
        Material(name="plastic", mu_low=0.015, mu_high=0.008)
    """
    model_config = ConfigDict(frozen=True)

    name: str
    mu_low: float = Field(..., description="Banda 10-60 keV (1/mm)")
    mu_high: float = Field(..., description="Banda > 60 keV (1/mm)")

    @field_validator("name")
    @classmethod
    def validate_name(cls, v):
        return validate_non_empty_string(v, "name")

    @model_validator(mode="after")
    def validate_ordering(self):
        validate_non_negative(self.mu_high, "mu_high")
        if self.mu_low < self.mu_high:
            raise ValueError(f"{self.name}: mu_low debe ser >= mu_high (la atenuación baja con la energía)")
        return self


DEFAULT_MATERIALS: Dict[str, Material] = {
    m.name: m for m in (
        Material(name="air", mu_low=0.0, mu_high=0.0),
        Material(name="plastic", mu_low=0.015, mu_high=0.008),
        Material(name="pcb", mu_low=0.06, mu_high=0.03),
        Material(name="lithium_cell", mu_low=0.25, mu_high=0.12),
        Material(name="steel", mu_low=0.9, mu_high=0.5),
    )
}


# ==================== OBJETOS DE LA ESCENA ====================

class _Slab(BaseModel):
    """Rectángulo alineado a ejes con espesor y material."""
    model_config = ConfigDict(frozen=True)

    id: str
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    thickness: float
    material: str

    @field_validator("thickness")
    @classmethod
    def validate_thickness(cls, v):
        return validate_positive(v, "thickness")

    @model_validator(mode="after")
    def validate_extent(self):
        if not self.x_min < self.x_max:
            raise ValueError(f"{self.id}: x_min debe ser menor que x_max")
        if not self.y_min < self.y_max:
            raise ValueError(f"{self.id}: y_min debe ser menor que y_max")
        return self

    @property
    def center(self) -> Tuple[float, float]:
        return 0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def width(self) -> float:
        return self.y_max - self.y_min

    def contains(self, other: "_Slab") -> bool:
        return (self.x_min <= other.x_min and other.x_max <= self.x_max
                and self.y_min <= other.y_min and other.y_max <= self.y_max)


class InclusionInstance(_Slab):
    """Componente interno sin batería (PCB, tornillería)."""
    material: str = "pcb"


class BatteryInstance(_Slab):
    """Batería contenida en un dispositivo."""
    battery_class: BatteryClassEnum
    material: str = "lithium_cell"


class DeviceInstance(_Slab):
    """
    Dispositivo sobre la cinta con sus baterías y componentes internos.

    Ejemplo:
        DeviceInstance(id="dev-0001", x_min=100, x_max=150, y_min=300, y_max=420,
                       thickness=10, batteries=[...])
    """
    material: str = "plastic"
    batteries: List[BatteryInstance] = Field(default_factory=list)
    inclusions: List[InclusionInstance] = Field(default_factory=list)

    @property
    def has_battery(self) -> bool:
        return bool(self.batteries)

    @model_validator(mode="after")
    def validate_children(self):
        for child in [*self.batteries, *self.inclusions]:
            if not self.contains(child):
                raise ValueError(f"{child.id} no está contenido en {self.id}")
        return self


class Scene(BaseModel):
    """
    Mundo sobre la cinta: dispositivos, materiales y velocidad común.

    Los materiales propios se fusionan sobre la tabla por defecto.
    """
    model_config = ConfigDict(frozen=True)

    conveyor_speed: float = Field(350.0, description="mm/s")
    belt_width: float = Field(800.0, description="mm")
    materials: Dict[str, Material] = Field(default_factory=lambda: dict(DEFAULT_MATERIALS))
    devices: List[DeviceInstance] = Field(default_factory=list)

    @field_validator("conveyor_speed", "belt_width")
    @classmethod
    def validate_positive_fields(cls, v, info: ValidationInfo):
        return validate_positive(v, info.field_name)

    @field_validator("materials")
    @classmethod
    def merge_materials(cls, v):
        merged = dict(DEFAULT_MATERIALS)
        for key, material in v.items():
            merged[key] = material
        return merged

    @model_validator(mode="after")
    def validate_layout(self):
        seen = set()
        for device in self.devices:
            if device.id in seen:
                raise ValueError(f"id de dispositivo repetido: {device.id}")
            seen.add(device.id)
            for slab in [device, *device.batteries, *device.inclusions]:
                if slab.material not in self.materials:
                    raise ValueError(f"{slab.id}: material desconocido '{slab.material}'")
                if slab.y_min < 0.0 or slab.y_max > self.belt_width:
                    raise ValueError(f"{slab.id}: extensión y fuera de [0, {self.belt_width}] mm")
        return self

    def material(self, name: str) -> Material:
        return self.materials[name]

    def device(self, device_id: str) -> DeviceInstance:
        for device in self.devices:
            if device.id == device_id:
                return device
        raise KeyError(device_id)


# ==================== ESCÁNER ====================

class ScannerConfig(BaseModel):
    """
    Configuración del detector de línea.

    La línea n se adquiere en t = n / line_rate y ve la franja x = n·pixel_pitch.
    """
    model_config = ConfigDict(frozen=True)

    line_rate: float = Field(3500.0, description="Hz")
    pixel_pitch: float = Field(0.1, description="mm/px")
    width_px: int = 8000
    belt_width: float = Field(800.0, description="mm")
    i0_low: float = Field(40000.0, description="cuentas/pixel/línea")
    i0_high: float = Field(40000.0, description="cuentas/pixel/línea")
    noise_mode: NoiseModeEnum = NoiseModeEnum.DETERMINISTIC
    noise_seed: Optional[int] = Field(None, description="Semilla Poisson; None = semilla del escenario")
    frame_height_lines: int = 3500
    bin_factor: int = 1
    gain_spread: float = Field(0.0, description="Dispersión relativa de ganancia por pixel")
    gain_seed: int = 0

    @field_validator("line_rate", "pixel_pitch", "belt_width", "i0_low", "i0_high")
    @classmethod
    def validate_positive_fields(cls, v, info: ValidationInfo):
        return validate_positive(v, info.field_name)

    @field_validator("gain_spread")
    @classmethod
    def validate_gain_spread(cls, v):
        return validate_range(v, 0.0, 0.5, "gain_spread")

    @model_validator(mode="after")
    def validate_geometry(self):
        if self.width_px <= 0:
            raise ValueError("width_px debe ser > 0")
        if abs(self.width_px * self.pixel_pitch - self.belt_width) > 1e-9 * self.belt_width:
            raise ValueError("width_px·pixel_pitch debe igualar belt_width")
        if self.frame_height_lines < 2 or self.frame_height_lines % 2:
            raise ValueError("frame_height_lines debe ser par y >= 2")
        if self.bin_factor < 1:
            raise ValueError("bin_factor debe ser >= 1")
        if (self.frame_height_lines // 2) % self.bin_factor or self.width_px % self.bin_factor:
            raise ValueError("bin_factor debe dividir frame_height_lines/2 y width_px")
        if max(self.i0_low, self.i0_high) * (1.0 + self.gain_spread) > MAX_COUNTS:
            raise ValueError("I0 con ganancia máxima no cabe en 16 bits")
        return self

    @property
    def half_height(self) -> int:
        return self.frame_height_lines // 2

    @property
    def line_period(self) -> float:
        return 1.0 / self.line_rate

    @property
    def synchronized_speed(self) -> float:
        """Velocidad de cinta (mm/s) a la que una línea avanza exactamente un pixel."""
        return self.line_rate * self.pixel_pitch


# ==================== LÍNEAS Y FRAMES ====================

@dataclass(frozen=True, eq=False)
class LineScan:
    """Una línea adquirida: conteos de 16 bits por banda."""
    line_index: int
    timestamp: float
    low: np.ndarray
    high: np.ndarray


@dataclass(frozen=True, eq=False)
class HalfBlock:
    """
    Media ventana de líneas consecutivas ya procesada (flat-field, binning, 8 bits).

    El procesado se hace una sola vez y bajo demanda; los dos frames que
    comparten esta mitad reciben exactamente los mismos bytes.
    """
    first_line: int
    line_count: int
    t_first: float
    source: Callable[[], Tuple[np.ndarray, np.ndarray]] = field(repr=False)

    @cached_property
    def bands(self) -> Tuple[np.ndarray, np.ndarray]:
        te, he = self.source()
        te.setflags(write=False)
        he.setflags(write=False)
        return te, he


@dataclass(frozen=True, eq=False)
class DualEnergyFrame:
    """
    Frame emitido por el buffer: dos mitades consecutivas (50% de solape).

    origin es la coordenada de franja (mm) de la primera línea; mm_per_px y
    row_period ya incluyen el factor de binning.
    """
    frame_index: int
    first_line: int
    origin: float
    t_first: float
    row_period: float
    mm_per_px: float
    height: int
    width: int
    halves: Tuple[HalfBlock, HalfBlock] = field(repr=False)

    @cached_property
    def te(self) -> np.ndarray:
        return np.vstack([self.halves[0].bands[0], self.halves[1].bands[0]])

    @cached_property
    def he(self) -> np.ndarray:
        return np.vstack([self.halves[0].bands[1], self.halves[1].bands[1]])

    @property
    def t_last(self) -> float:
        """Instante de la última fila del frame."""
        return self.t_first + (self.height - 1) * self.row_period

    @property
    def extent_mm(self) -> float:
        return self.height * self.mm_per_px
