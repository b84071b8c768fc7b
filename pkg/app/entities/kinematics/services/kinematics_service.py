"""
Service Layer para la cinemática del robot delta

Cinemática directa por intersección de tres esferas (una por antebrazo),
inversa cerrada por brazo con la sustitución de tangente del semiángulo,
y el residuo de la ecuación de restricción como oráculo independiente.

Todas las operaciones tienen una forma vectorizada (*_batch) sobre arrays
(N, 3); las escalares delegan en ellas.
"""

import logging
from typing import Optional

import numpy as np

from app.entities.kinematics.schemas.kinematics_schemas import (
    DeltaParams,
    EefPose,
    JointAngles,
    JointLimits,
)
from app.shared.exceptions import (
    DegenerateConfigurationError,
    DomainError,
    NoIntersectionError,
    SingularConfigurationError,
    UnreachableError,
)


logger = logging.getLogger(__name__)

_COLLINEAR_TOL = 1e-12
_DISC_TOL = 1e-12


# ==================== GEOMETRÍA ====================

def sphere_centers(params: DeltaParams, thetas: np.ndarray) -> np.ndarray:
    """
    Centros de las esferas de los antebrazos, desplazados por el radio del efector.

    Args:
        thetas: (N, 3) ángulos articulares

    Returns:
        (N, 3, 3): [muestra, brazo, coordenada]
    """
    thetas = np.asarray(thetas, dtype=float).reshape(-1, 3)
    gammas = params.gamma_array()
    rho = params.radius_offset + params.arm_length * np.cos(thetas)
    return np.stack(
        [-rho * np.cos(gammas), -rho * np.sin(gammas), -params.arm_length * np.sin(thetas)],
        axis=-1,
    )


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", a, b)


# ==================== CINEMÁTICA DIRECTA ====================

def forward_kinematics_batch(params: DeltaParams, thetas: np.ndarray) -> np.ndarray:
    """
    Cinemática directa vectorizada.

    Resta las ecuaciones de esfera para obtener dos planos, cuya recta de
    corte se interseca con la primera esfera; de las dos soluciones se
    devuelve la de menor z (robot colgando bajo la base).

    Raises:
        DegenerateConfigurationError: Centros colineales
        NoIntersectionError: Las esferas no tienen punto común
    """
    thetas = np.asarray(thetas, dtype=float).reshape(-1, 3)
    centers = sphere_centers(params, thetas)
    c1, c2, c3 = centers[:, 0], centers[:, 1], centers[:, 2]

    n2 = c1 - c2
    n3 = c1 - c3
    squared = _dot(centers, centers)
    r2 = 0.5 * (squared[:, 0] - squared[:, 1])
    r3 = 0.5 * (squared[:, 0] - squared[:, 2])

    direction = np.cross(n2, n3)
    dd = _dot(direction, direction)
    n22, n33, n23 = _dot(n2, n2), _dot(n3, n3), _dot(n2, n3)

    degenerate = dd <= _COLLINEAR_TOL * n22 * n33
    if np.any(degenerate):
        raise DegenerateConfigurationError(thetas[int(np.argmax(degenerate))])

    # Punto de la recta en el plano generado por n2 y n3
    p0 = (((r2 * n33 - r3 * n23)[:, None] * n2) + ((r3 * n22 - r2 * n23)[:, None] * n3)) / dd[:, None]

    w = p0 - c1
    b = 2.0 * _dot(direction, w)
    c = _dot(w, w) - params.forearm_length ** 2
    disc = b * b - 4.0 * dd * c

    missing = disc < -_DISC_TOL * b * b
    if np.any(missing):
        raise NoIntersectionError(thetas[int(np.argmax(missing))])

    root = np.sqrt(np.maximum(disc, 0.0))
    s_low = (-b - root) / (2.0 * dd)
    s_high = (-b + root) / (2.0 * dd)
    z_low = p0[:, 2] + s_low * direction[:, 2]
    z_high = p0[:, 2] + s_high * direction[:, 2]
    s = np.where(z_low <= z_high, s_low, s_high)
    return p0 + s[:, None] * direction


def forward_kinematics(params: DeltaParams, joints: JointAngles) -> EefPose:
    """
    Cinemática directa de una configuración.

    Ejemplo:
        forward_kinematics(DeltaParams(), JointAngles(0, 0, 0))
        # EefPose(x=0.0, y=0.0, z=-738.6907...)
    """
    return EefPose.from_array(forward_kinematics_batch(params, joints.as_array())[0])


# ==================== CINEMÁTICA INVERSA ====================

def _arm_coefficients(params: DeltaParams, poses: np.ndarray):
    """Coeficientes de A·cos(θ) + B·sin(θ) + C = 0 por muestra y brazo."""
    gammas = params.gamma_array()
    x, y, z = poses[:, 0:1], poses[:, 1:2], poses[:, 2:3]
    radial = x * np.cos(gammas) + y * np.sin(gammas)
    offset = params.radius_offset
    l = params.arm_length

    a = 2.0 * l * (radial + offset)
    b = np.broadcast_to(2.0 * l * z, a.shape)
    c = (x * x + y * y + z * z) + 2.0 * offset * radial + offset ** 2 + l ** 2 - params.forearm_length ** 2
    return a, b, c


def inverse_kinematics_batch(params: DeltaParams, poses: np.ndarray) -> np.ndarray:
    """
    Cinemática inversa vectorizada, rama de codo hacia fuera.

    Con t = tan(θ/2) la ecuación de cada brazo queda
    (C - A)·t² + 2B·t + (A + C) = 0, resuelta en forma numéricamente
    estable; si C - A se anula, una raíz tiende a θ = π y la otra es la
    raíz lineal -(A + C)/(2B). Entre las dos raíces se elige aquella en la
    que el residuo del brazo decrece con θ; en empate, la de menor |θ|.

    Raises:
        UnreachableError: Discriminante negativo en algún brazo
        SingularConfigurationError: Ecuación sin raíz utilizable
    """
    poses = np.asarray(poses, dtype=float).reshape(-1, 3)
    a, b, c = _arm_coefficients(params, poses)

    scale = a * a + b * b
    disc = b * b + a * a - c * c
    unreachable = disc < -_DISC_TOL * scale
    if np.any(unreachable):
        row, arm = np.argwhere(unreachable)[0]
        raise UnreachableError(poses[row], int(arm))

    root = np.sqrt(np.maximum(disc, 0.0))
    q = -(b + np.copysign(root, b))

    degenerate_q = q == 0.0
    if np.any(degenerate_q & (np.abs(a + c) > _DISC_TOL * np.sqrt(scale))):
        row, arm = np.argwhere(degenerate_q)[0]
        raise SingularConfigurationError(poses[row], int(arm))

    with np.errstate(divide="ignore", invalid="ignore"):
        t_first = np.where(degenerate_q, 0.0, q / (c - a))
        t_second = np.where(degenerate_q, 0.0, (c + a) / np.where(degenerate_q, 1.0, q))

    theta_first = 2.0 * np.arctan(t_first)
    theta_second = 2.0 * np.arctan(t_second)

    slope_first = -a * np.sin(theta_first) + b * np.cos(theta_first)
    slope_second = -a * np.sin(theta_second) + b * np.cos(theta_second)
    tie = np.abs(slope_first - slope_second) <= _DISC_TOL * np.sqrt(scale)
    pick_first = np.where(
        tie,
        np.abs(theta_first) <= np.abs(theta_second),
        slope_first < slope_second,
    )
    return np.where(pick_first, theta_first, theta_second)


def inverse_kinematics(params: DeltaParams, pose: EefPose) -> JointAngles:
    """
    Cinemática inversa de una pose.

    Ejemplo:
        inverse_kinematics(DeltaParams(), EefPose(0, 0, -2000))
        # UnreachableError
    """
    return JointAngles.from_array(inverse_kinematics_batch(params, pose.as_array())[0])


# ==================== ORÁCULOS ====================

def constraint_residual_batch(params: DeltaParams, thetas: np.ndarray, poses: np.ndarray) -> np.ndarray:
    """Lado izquierdo de la ecuación de restricción (mm²) por muestra y brazo."""
    thetas = np.asarray(thetas, dtype=float).reshape(-1, 3)
    poses = np.asarray(poses, dtype=float).reshape(-1, 3)
    gammas = params.gamma_array()
    l = params.arm_length
    offset = params.radius_offset

    rho = offset + l * np.cos(thetas)
    coef_a = 2.0 * rho * np.cos(gammas)
    coef_b = 2.0 * rho * np.sin(gammas)
    coef_c = 2.0 * l * np.sin(thetas)
    coef_d = l ** 2 - params.forearm_length ** 2 + offset ** 2 + 2.0 * offset * l * np.cos(thetas)

    x, y, z = poses[:, 0:1], poses[:, 1:2], poses[:, 2:3]
    return (x * x + y * y + z * z) + coef_a * x + coef_b * y + coef_c * z + coef_d


def constraint_residual(params: DeltaParams, joints: JointAngles, pose: EefPose) -> np.ndarray:
    """
    Residuo de las tres restricciones (mm²).

    Ejemplo:
        constraint_residual(DeltaParams(), JointAngles(0, 0, 0), EefPose(0, 0, 0))
        # array([-545664., -545664., -545664.])
    """
    return constraint_residual_batch(params, joints.as_array(), pose.as_array())[0]


def is_reachable(params: DeltaParams, pose: EefPose, limits: Optional[JointLimits] = None) -> bool:
    """True si la inversa tiene solución y queda dentro de los límites articulares."""
    limits = limits or JointLimits()
    try:
        joints = inverse_kinematics(params, pose)
    except DomainError as e:
        logger.debug("Pose %s fuera de alcance: %s", pose, e.message)
        return False
    return joints.is_finite() and limits.contains(joints)


def reachable_mask(params: DeltaParams, poses: np.ndarray, limits: Optional[JointLimits] = None) -> np.ndarray:
    """
    Versión vectorizada de is_reachable: un booleano por pose.

    Evalúa pose a pose solo cuando el lote completo falla.
    """
    limits = limits or JointLimits()
    poses = np.asarray(poses, dtype=float).reshape(-1, 3)
    try:
        thetas = inverse_kinematics_batch(params, poses)
    except DomainError:
        return np.array([is_reachable(params, EefPose.from_array(p), limits) for p in poses], dtype=bool)
    inside = (thetas >= limits.theta_min) & (thetas <= limits.theta_max)
    return np.all(inside & np.isfinite(thetas), axis=1)
