"""
Schemas para el modelo geométrico del robot delta

DeltaParams es configuración (Pydantic, validada); JointAngles y EefPose
son valores numéricos inmutables que circulan por los bucles calientes
del simulador, así que se modelan como dataclasses congeladas.
"""

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

from app.shared.validators import validate_positive, validate_finite_vector


DEFAULT_GAMMAS = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)

# Datos de masa e inercia del robot de referencia; se cargan pero no se simula dinámica
DEFAULT_MASSES_KG = {
    "base": 13.74,
    "arm": 0.44,
    "forearm": 0.2,
    "elbow_wrist": 0.05,
    "end_effector": 0.51,
}
DEFAULT_INERTIAS_KG_M2 = {
    "base": (0.0018120034, 0.0, 0.0018120034),
    "arm": (0.0001447401, 0.015154084, 0.0152228384),
    "forearm": (0.016870159, 0.0000088926, 0.0168698215),
    "elbow_wrist": (0.0000365556, 0.0000019483, 0.0000364106),
    "end_effector": (0.0000679006, 0.0, 0.0000679006),
}


class DeltaParams(BaseModel):
    """
    Geometría del robot delta (mm, rad).

    Ejemplo:
        params = DeltaParams()                       # robot de referencia
        params = DeltaParams(forearm_length=900.0)   # variante
    """
    model_config = ConfigDict(frozen=True)

    base_radius: float = Field(150.0, description="R: radio de la base (mm)")
    eef_radius: float = Field(54.0, description="r: radio del efector final (mm)")
    arm_length: float = Field(260.0, description="l: brazo actuado (mm)")
    forearm_length: float = Field(820.0, description="L: antebrazo (mm)")
    gammas: Tuple[float, float, float] = Field(DEFAULT_GAMMAS, description="Ángulo de montaje de cada brazo (rad)")
    reduction_ratio: float = Field(25.0, description="Reducción de la caja (no usada por la cinemática)")
    masses_kg: Dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_MASSES_KG))
    inertias_kg_m2: Dict[str, Tuple[float, float, float]] = Field(
        default_factory=lambda: dict(DEFAULT_INERTIAS_KG_M2)
    )

    @field_validator("base_radius", "eef_radius", "arm_length", "forearm_length", "reduction_ratio")
    @classmethod
    def validate_lengths(cls, v, info: ValidationInfo):
        return validate_positive(v, info.field_name)

    @field_validator("gammas")
    @classmethod
    def validate_gammas(cls, v):
        return validate_finite_vector(v, 3, "gammas")

    @model_validator(mode="after")
    def validate_proportions(self):
        if self.forearm_length <= self.arm_length:
            raise ValueError("forearm_length debe ser mayor que arm_length")
        if self.base_radius <= self.eef_radius:
            raise ValueError("base_radius debe ser mayor que eef_radius")
        return self

    @property
    def radius_offset(self) -> float:
        """R - r."""
        return self.base_radius - self.eef_radius

    def gamma_array(self) -> np.ndarray:
        return np.asarray(self.gammas, dtype=float)


@dataclass(frozen=True)
class JointAngles:
    """Ángulos actuados (rad), medidos desde el plano de la base, positivos hacia abajo."""
    theta1: float
    theta2: float
    theta3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.theta3], dtype=float)

    @classmethod
    def from_array(cls, values) -> "JointAngles":
        a, b, c = (float(v) for v in values)
        return cls(a, b, c)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.theta1, self.theta2, self.theta3))


@dataclass(frozen=True)
class EefPose:
    """Posición del efector final (mm) en el marco de la base; z negativo bajo la base."""
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values) -> "EefPose":
        a, b, c = (float(v) for v in values)
        return cls(a, b, c)


class JointLimits(BaseModel):
    """
    Límites mecánicos por brazo (rad).

    El límite superior por defecto queda por debajo del pliegue brazo/antebrazo
    de la rama de codo hacia fuera (~1.66 rad en la pose simétrica).
    """
    model_config = ConfigDict(frozen=True)

    theta_min: float = -0.6
    theta_max: float = 1.6

    @model_validator(mode="after")
    def validate_order(self):
        if not (math.isfinite(self.theta_min) and math.isfinite(self.theta_max)):
            raise ValueError("Los límites articulares deben ser finitos")
        if self.theta_min >= self.theta_max:
            raise ValueError("theta_min debe ser menor que theta_max")
        return self

    def contains(self, joints) -> bool:
        """Acepta JointAngles o un array (..., 3); True si todos están dentro."""
        values = joints.as_array() if isinstance(joints, JointAngles) else np.asarray(joints, dtype=float)
        return bool(np.all((values >= self.theta_min) & (values <= self.theta_max)))
