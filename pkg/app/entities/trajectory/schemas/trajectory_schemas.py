"""
Schemas de trayectorias pick-and-place

Valores inmutables basados en arrays de numpy; eq=False porque la
igualdad elemento a elemento de arrays no tiene sentido como __eq__.
"""

from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from app.entities.kinematics.schemas.kinematics_schemas import JointAngles
from app.shared.validators import validate_positive, validate_unit_interval


@dataclass(frozen=True, eq=False)
class PiPath:
    """
    Trayectoria Pi de cuatro puntos: recogida, dos intermedios elevados h y depósito.

    waypoints es (4, 3) con los intermedios ya ajustados por alpha.
    """
    pick: Tuple[float, float, float]
    place: Tuple[float, float, float]
    h: float
    alpha: float
    waypoints: np.ndarray

    def raw_corners(self) -> np.ndarray:
        """Las cuatro esquinas de la Pi sin ajuste de curvatura."""
        pick = np.asarray(self.pick, dtype=float)
        place = np.asarray(self.place, dtype=float)
        lift = np.array([0.0, 0.0, self.h])
        return np.stack([pick, pick + lift, place + lift, place])

    def is_stationary(self) -> bool:
        return bool(np.array_equal(np.asarray(self.pick), np.asarray(self.place)))


@dataclass(frozen=True, eq=False)
class PiecewiseCubicTrajectory:
    """
    Spline cúbico por eje con velocidades prescritas en los nudos.

    coefficients tiene forma (n, 4, 3): segmento, potencia (a_k0..a_k3), eje.
    """
    knot_times: np.ndarray
    knot_positions: np.ndarray
    knot_velocities: np.ndarray
    coefficients: np.ndarray

    @property
    def t_start(self) -> float:
        return float(self.knot_times[0])

    @property
    def t_end(self) -> float:
        return float(self.knot_times[-1])

    @property
    def segment_count(self) -> int:
        return int(self.coefficients.shape[0])


@dataclass(frozen=True, eq=False)
class JointTrajectory:
    """
    Trayectoria muestreada a paso uniforme dt, en espacio cartesiano y articular.

    Todas las matrices tienen una fila por muestra.
    """
    times: np.ndarray
    joints: np.ndarray
    joint_velocities: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    dt: float
    cartesian: Optional[PiecewiseCubicTrajectory] = field(default=None)

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def samples(self) -> Iterator[Tuple[float, JointAngles, np.ndarray]]:
        """Itera (t, JointAngles, velocidades articulares)."""
        for t, theta, omega in zip(self.times, self.joints, self.joint_velocities):
            yield float(t), JointAngles.from_array(theta), omega

    def index_at(self, t: float) -> int:
        """Índice de la última muestra con tiempo <= t (acotado al rango)."""
        idx = int(np.searchsorted(self.times, t + 1e-9 * self.dt, side="right")) - 1
        return min(max(idx, 0), len(self) - 1)


class TrajectoryConfig(BaseModel):
    """
    Parámetros de la trayectoria Pi del robot.

    Ejemplo:
        TrajectoryConfig(t_total=1.0, h=100.0, alpha=0.77)
    """
    model_config = ConfigDict(frozen=True)

    t_total: float = Field(1.0, description="Duración de cada tramo pick/place (s)")
    h: float = Field(100.0, description="Elevación de los puntos intermedios (mm)")
    alpha: float = Field(0.77, description="Factor de curvatura")
    dt: float = Field(0.001, description="Paso de muestreo (s)")

    @field_validator("t_total", "h", "dt")
    @classmethod
    def validate_positive_fields(cls, v, info: ValidationInfo):
        return validate_positive(v, info.field_name)

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v):
        return validate_unit_interval(v, "alpha")
