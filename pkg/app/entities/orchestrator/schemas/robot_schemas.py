"""
Schemas del robot de clasificación: montaje sobre la cinta, ventosa y tiempos
"""

from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from app.entities.kinematics.schemas.kinematics_schemas import DeltaParams, JointLimits
from app.entities.tracking.schemas.tracking_schemas import DEFAULT_PLACE_POINT
from app.shared.validators import validate_finite_vector, validate_non_negative, validate_positive


DEFAULT_HOME_POINT = (0.0, 0.0, -800.0)


class RobotConfig(BaseModel):
    """
    Robot delta con ventosa montado sobre la cinta.

    El marco del robot es el de la cinta trasladado por
    (robot_center_x, robot_center_y); la cinta está en z = belt_z.

    Ejemplo:
        RobotConfig(place_point=(0.0, -350.0, -900.0), grasp_tol_mm=8.0)
    """
    model_config = ConfigDict(frozen=True)

    params: DeltaParams = Field(default_factory=DeltaParams)
    limits: JointLimits = Field(default_factory=JointLimits)
    robot_center_x: float = Field(2000.0, description="Distancia aguas abajo del detector (mm)")
    robot_center_y: float = Field(400.0, description="Posición transversal del eje del robot (mm)")
    belt_z: float = Field(-900.0, description="Plano de la cinta en el marco del robot (mm)")
    reach_mm: float = Field(450.0, description="Radio del disco de recogida sobre la cinta")
    home_point: Tuple[float, float, float] = Field(DEFAULT_HOME_POINT, description="Pose de reposo (mm)")
    place_point: Tuple[float, float, float] = Field(DEFAULT_PLACE_POINT, description="Contenedor de baterías (mm)")
    grasp_tol_mm: float = Field(10.0, description="Tolerancia horizontal de la ventosa")
    grasp_z_tol_mm: float = Field(5.0, description="Tolerancia vertical respecto al plano de la cinta")
    grasp_dwell_s: float = Field(0.05, description="Tiempo de succión")
    release_dwell_s: float = Field(0.05, description="Tiempo de liberación")
    homing_s: float = Field(0.5, description="Regreso a la pose de reposo")
    exit_margin_mm: float = Field(1000.0, description="Un objeto sale de la cinta al pasar robot_center_x + margen")

    @field_validator("home_point", "place_point")
    @classmethod
    def validate_points(cls, v, info: ValidationInfo):
        return validate_finite_vector(v, 3, info.field_name)

    @field_validator("reach_mm", "grasp_tol_mm", "grasp_z_tol_mm", "homing_s", "exit_margin_mm")
    @classmethod
    def validate_positive_fields(cls, v, info: ValidationInfo):
        return validate_positive(v, info.field_name)

    @field_validator("grasp_dwell_s", "release_dwell_s")
    @classmethod
    def validate_dwells(cls, v, info: ValidationInfo):
        return validate_non_negative(v, info.field_name)

    def cycle_time(self, t_total: float) -> float:
        """Ocupación del robot desde t_pick hasta volver a Idle."""
        return self.grasp_dwell_s + t_total + self.release_dwell_s + self.homing_s

    def to_robot_frame(self, x_belt: float, y_belt: float) -> Tuple[float, float, float]:
        """Punto de la cinta (mm) → punto sobre la cinta en el marco del robot."""
        return x_belt - self.robot_center_x, y_belt - self.robot_center_y, self.belt_z
