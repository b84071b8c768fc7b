"""
Schemas del escenario: configuración completa, eventos e informe final

Las claves del JSON de escenario son planas en el primer nivel y se agrupan
por subsistema en scanner / robot / trajectory / tracking / detection.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationInfo, field_validator, model_validator

from app.entities.detection.schemas.detection_schemas import DetectionConfig, DetectorModeEnum
from app.entities.orchestrator.schemas.enums import EventTypeEnum, ItemOutcomeEnum, MissReasonEnum
from app.entities.orchestrator.schemas.robot_schemas import RobotConfig
from app.entities.tracking.schemas.tracking_schemas import TrackingConfig
from app.entities.trajectory.schemas.trajectory_schemas import TrajectoryConfig
from app.entities.xray_sim.schemas.enums import NoiseModeEnum
from app.entities.xray_sim.schemas.xray_schemas import ScannerConfig
from app.shared.validators import (
    validate_non_negative,
    validate_positive,
    validate_unit_interval,
)


# Holgura entre una batería y el borde de su dispositivo (mm)
BATTERY_MARGIN_MM = 5.0
# Separación mínima entre un dispositivo y el borde de la cinta (mm)
BELT_EDGE_MARGIN_MM = 20.0

_MOUNT_FIELDS = ("robot_center_x", "robot_center_y", "belt_z", "reach_mm")


def _validate_range_pair(v, field_name: str) -> Tuple[float, float]:
    low, high = (float(x) for x in v)
    validate_positive(low, field_name)
    if high < low:
        raise ValueError(f"{field_name}: el máximo debe ser >= el mínimo")
    return low, high


class ScenarioConfig(BaseModel):
    """
    Escenario completo de clasificación.

    Todos los valores por defecto reproducen la línea de referencia:
    350 mm/s, 3500 líneas/s a 0.1 mm/px, robot a 2000 mm, t_total 1 s, alpha 0.77.

    Ejemplo:
        ScenarioConfig(n_items=10, battery_fraction=0.5, seed=3)
        ScenarioConfig.model_validate_json(path.read_text())
    """

    n_items: int = Field(120, description="Dispositivos generados")
    battery_fraction: float = Field(0.7, description="Fracción con batería")
    conveyor_speed: float = Field(350.0, description="mm/s")
    spawn_headway_s: float = Field(3.0, description="Separación temporal entre dispositivos")
    spawn_distance_mm: float = Field(200.0, description="Distancia aguas arriba del detector al aparecer")
    detector_mode: DetectorModeEnum = DetectorModeEnum.ORACLE
    noise_mode: Optional[NoiseModeEnum] = Field(None, description="Override de scanner.noise_mode")
    seed: Optional[int] = Field(None, description="None = semilla de Settings (WEEE_SEED)")
    output_dir: Optional[str] = Field(None, description="None = output_dir de Settings")
    dt: float = Field(0.001, description="Paso fijo del simulador (s)")

    device_length_mm: Tuple[float, float] = (60.0, 160.0)
    device_width_mm: Tuple[float, float] = (40.0, 120.0)
    device_thickness_mm: Tuple[float, float] = (8.0, 15.0)
    pcb_probability: float = 0.5

    scanner: ScannerConfig = Field(default_factory=ScannerConfig)
    robot: RobotConfig = Field(default_factory=RobotConfig)
    trajectory: TrajectoryConfig = Field(default_factory=TrajectoryConfig)
    tracking: TrackingConfig = Field(default_factory=TrackingConfig)
    detection: DetectionConfig = Field(default_factory=DetectionConfig)

    @field_validator("n_items")
    @classmethod
    def validate_n_items(cls, v):
        if v < 0:
            raise ValueError("n_items debe ser >= 0")
        return v

    @field_validator("battery_fraction", "pcb_probability")
    @classmethod
    def validate_fractions(cls, v, info: ValidationInfo):
        return validate_unit_interval(v, info.field_name)

    @field_validator("conveyor_speed", "spawn_headway_s", "dt")
    @classmethod
    def validate_positive_fields(cls, v, info: ValidationInfo):
        return validate_positive(v, info.field_name)

    @field_validator("spawn_distance_mm")
    @classmethod
    def validate_spawn_distance(cls, v):
        return validate_non_negative(v, "spawn_distance_mm")

    @field_validator("device_length_mm", "device_width_mm", "device_thickness_mm")
    @classmethod
    def validate_ranges(cls, v, info: ValidationInfo):
        return _validate_range_pair(v, info.field_name)

    @model_validator(mode="after")
    def validate_consistency(self):
        scanner = self.scanner
        if abs(self.conveyor_speed - scanner.synchronized_speed) > 1e-9 * self.conveyor_speed:
            raise ValueError(
                f"conveyor_speed ({self.conveyor_speed}) debe igualar line_rate·pixel_pitch "
                f"({scanner.synchronized_speed})"
            )
        half_extent = scanner.half_height * scanner.pixel_pitch
        if self.device_length_mm[1] >= half_extent:
            raise ValueError(f"device_length_mm máximo debe ser < {half_extent} mm (media ventana)")
        if self.device_width_mm[1] + 2.0 * BELT_EDGE_MARGIN_MM > scanner.belt_width:
            raise ValueError("device_width_mm máximo no cabe en la cinta")

        if self.noise_mode is not None and self.noise_mode != scanner.noise_mode:
            self.scanner = scanner.model_copy(update={"noise_mode": self.noise_mode})

        # El montaje del robot vive en `robot`; tracking lo hereda
        explicit = {
            name for name in _MOUNT_FIELDS
            if name in self.tracking.model_fields_set and getattr(self.tracking, name) != getattr(self.robot, name)
        }
        if explicit:
            raise ValueError(f"tracking.{sorted(explicit)[0]} contradice la configuración de robot")
        self.tracking = self.tracking.model_copy(update={name: getattr(self.robot, name) for name in _MOUNT_FIELDS})
        return self

    @property
    def cycle_time(self) -> float:
        return self.robot.cycle_time(self.trajectory.t_total)

    def battery_count(self) -> int:
        """Número de dispositivos con batería: n·f redondeado half-up."""
        return int(self.n_items * self.battery_fraction + 0.5)


# ==================== EVENTOS ====================

@dataclass(frozen=True)
class Event:
    """Fila del registro de eventos: t, event_type, item_id, detail."""
    t: float
    event_type: EventTypeEnum
    item_id: str = ""
    detail: str = ""


# ==================== INFORME ====================

class ItemTiming(BaseModel):
    """Historia de un dispositivo físico a lo largo del escenario."""
    item_id: str
    has_battery: bool
    spawn_t: float
    detected_t: Optional[float] = None
    t_pick: Optional[float] = None
    binned_t: Optional[float] = None
    exit_t: Optional[float] = None
    outcome: ItemOutcomeEnum
    reason: Optional[MissReasonEnum] = None


class ScenarioReport(BaseModel):
    """
    Resultado de run_scenario.

    Se cumple siempre: spawned = sorted_to_bin + missed + wrong_picks + pass_through.
    """
    seed: int
    detector_mode: DetectorModeEnum
    sim_time_s: float

    spawned: int
    battery_items: int
    sorted_to_bin: int
    missed: int
    missed_reasons: Dict[str, int] = Field(default_factory=dict)
    wrong_picks: int
    pass_through: int

    pick_requests: int
    acks: int
    rejects: int
    infeasible: int

    lines_scanned: int
    frames_emitted: int
    detected_items: int

    tracking_error_mean_mm: float
    tracking_error_max_mm: float
    grasp_error_mean_mm: float
    grasp_error_max_mm: float
    prediction_error_max_mm: float

    items: List[ItemTiming] = Field(default_factory=list)

    @model_validator(mode="after")
    def validate_conservation(self):
        total = self.sorted_to_bin + self.missed + self.wrong_picks + self.pass_through
        if total != self.spawned:
            raise ValueError(f"Conservación violada: {total} != spawned {self.spawned}")
        if self.pick_requests != self.acks + self.rejects:
            raise ValueError("Cada PickRequest debe tener exactamente un Ack o Reject")
        return self
