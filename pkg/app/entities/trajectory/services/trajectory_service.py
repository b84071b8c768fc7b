"""
Service Layer para trayectorias pick-and-place

Construye la trayectoria Pi de cuatro puntos, la interpola por eje con
cúbicas de velocidad prescrita en los nudos (C¹, reposo en los extremos)
y la convierte al espacio articular muestreando la cinemática inversa.
"""

import csv
import logging
from typing import Optional, Sequence, TextIO, Tuple

import numpy as np
from scipy.interpolate import PPoly

from app.entities.kinematics.schemas.kinematics_schemas import DeltaParams, EefPose, JointLimits
from app.entities.kinematics.services.kinematics_service import (
    forward_kinematics_batch,
    inverse_kinematics_batch,
    is_reachable,
)
from app.entities.trajectory.schemas.trajectory_schemas import (
    JointTrajectory,
    PiecewiseCubicTrajectory,
    PiPath,
)
from app.shared.exceptions import (
    DomainError,
    InvalidAlphaError,
    NonPositiveDurationError,
    NonPositiveOffsetError,
    OutOfDomainError,
    UnreachableSampleError,
    UnreachableWaypointError,
)
from app.shared.formatting import format_float


logger = logging.getLogger(__name__)

DEFAULT_DT = 0.001
MIN_LEG_SHARE = 1e-3
TRAJECTORY_CSV_COLUMNS = ["t", "x", "y", "z", "vx", "vy", "vz", "th1", "th2", "th3"]


# ==================== TRAYECTORIA PI ====================

def build_pi_path(pick: Sequence[float], place: Sequence[float], h: float, alpha: float) -> PiPath:
    """
    Construye la trayectoria Pi con los intermedios atraídos hacia su mediana.

    Ejemplo:
        build_pi_path((-200, 0, -900), (200, 0, -900), 100, 0.77).waypoints[1]
        # array([ -46.,    0., -800.])

    Raises:
        InvalidAlphaError: alpha fuera de [0, 1]
        NonPositiveOffsetError: h <= 0
    """
    if not (0.0 <= alpha <= 1.0):
        raise InvalidAlphaError(alpha)
    if not h > 0.0:
        raise NonPositiveOffsetError(h)

    pick_arr = np.asarray(pick, dtype=float).reshape(3)
    place_arr = np.asarray(place, dtype=float).reshape(3)
    lift = np.array([0.0, 0.0, h])
    p1 = pick_arr + lift
    p2 = place_arr + lift
    median = 0.5 * (p1 + p2)

    waypoints = np.stack([
        pick_arr,
        (1.0 - alpha) * p1 + alpha * median,
        (1.0 - alpha) * p2 + alpha * median,
        place_arr,
    ])
    return PiPath(
        pick=tuple(float(v) for v in pick_arr),
        place=tuple(float(v) for v in place_arr),
        h=float(h),
        alpha=float(alpha),
        waypoints=waypoints,
    )


def allocate_knot_times(waypoints: np.ndarray, total_time: float, t_start: float = 0.0) -> np.ndarray:
    """
    Reparte total_time entre tramos en proporción a su longitud cartesiana.

    Los tramos de longitud nula reciben una fracción mínima de MIN_LEG_SHARE.
    """
    if not total_time > 0.0:
        raise NonPositiveDurationError(total_time)
    legs = np.linalg.norm(np.diff(waypoints, axis=0), axis=1)
    total_length = float(legs.sum())
    if total_length > 0.0:
        shares = np.maximum(legs / total_length, MIN_LEG_SHARE)
    else:
        shares = np.ones_like(legs)
    shares = shares / shares.sum()

    times = t_start + total_time * np.concatenate([[0.0], np.cumsum(shares)])
    times[-1] = t_start + total_time
    return times


# ==================== SPLINE CÚBICO ====================

def intermediate_velocities(positions, times) -> np.ndarray:
    """
    Velocidades en los nudos: media de pendientes contiguas, 0 si cambian de signo.

    Acepta posiciones (n+1,) o (n+1, ejes); los extremos quedan en reposo.

    Ejemplo:
        intermediate_velocities([0, 1, 3], [0, 1, 2])  # array([0. , 1.5, 0. ])
    """
    q = np.asarray(positions, dtype=float)
    t = np.asarray(times, dtype=float)
    squeeze = q.ndim == 1
    if squeeze:
        q = q[:, None]
    durations = np.diff(t)
    if np.any(durations <= 0.0):
        raise NonPositiveDurationError(float(durations.min()))

    velocities = np.zeros_like(q)
    if q.shape[0] > 2:
        slopes = np.diff(q, axis=0) / durations[:, None]
        before, after = slopes[:-1], slopes[1:]
        velocities[1:-1] = np.where(before * after <= 0.0, 0.0, 0.5 * (before + after))
    return velocities[:, 0] if squeeze else velocities


def cubic_coefficients(q_k, q_k1, v_k, v_k1, duration: float) -> Tuple:
    """
    Coeficientes (a0, a1, a2, a3) del segmento en tiempo local.

    Funciona con escalares o arrays por eje.

    Ejemplo:
        cubic_coefficients(0, 1, 0, 0, 1)  # (0, 0, 3, -2)
    """
    if not duration > 0.0:
        raise NonPositiveDurationError(duration)
    q_k = np.asarray(q_k, dtype=float)
    q_k1 = np.asarray(q_k1, dtype=float)
    v_k = np.asarray(v_k, dtype=float)
    v_k1 = np.asarray(v_k1, dtype=float)

    a0 = q_k
    a1 = v_k
    a2 = (3.0 * (q_k1 - q_k) / duration - 2.0 * v_k - v_k1) / duration
    a3 = (2.0 * (q_k - q_k1) / duration + v_k + v_k1) / duration ** 2
    if a0.ndim == 0:
        return float(a0), float(a1), float(a2), float(a3)
    return a0, a1, a2, a3


def build_cartesian_trajectory(path: PiPath, total_time: float, t_start: float = 0.0) -> PiecewiseCubicTrajectory:
    """Spline cúbico por eje a través de los cuatro puntos de paso."""
    return build_piecewise_cubic(path.waypoints, allocate_knot_times(path.waypoints, total_time, t_start))


def build_piecewise_cubic(positions: np.ndarray, times: np.ndarray) -> PiecewiseCubicTrajectory:
    positions = np.asarray(positions, dtype=float)
    times = np.asarray(times, dtype=float)
    velocities = intermediate_velocities(positions, times)

    segments = []
    for k in range(len(times) - 1):
        segments.append(np.stack(cubic_coefficients(
            positions[k], positions[k + 1], velocities[k], velocities[k + 1], times[k + 1] - times[k]
        )))
    return PiecewiseCubicTrajectory(
        knot_times=times,
        knot_positions=positions,
        knot_velocities=velocities,
        coefficients=np.stack(segments),
    )


def _as_ppoly(traj: PiecewiseCubicTrajectory) -> PPoly:
    # PPoly espera la potencia más alta primero: (4, n, ejes)
    return PPoly(np.transpose(traj.coefficients[:, ::-1, :], (1, 0, 2)), traj.knot_times, extrapolate=False)


def _segment_state(traj: PiecewiseCubicTrajectory, k: int, tau: float):
    a0, a1, a2, a3 = traj.coefficients[k]
    position = a0 + tau * (a1 + tau * (a2 + tau * a3))
    velocity = a1 + tau * (2.0 * a2 + tau * 3.0 * a3)
    acceleration = 2.0 * a2 + 6.0 * a3 * tau
    return position, velocity, acceleration


def evaluate(traj: PiecewiseCubicTrajectory, t: float, side: str = "right"):
    """
    Posición, velocidad y aceleración por eje en el instante t.

    En un nudo interior side="right" usa el segmento que empieza ahí y
    side="left" el que termina ahí. Sobre un nudo la posición devuelta es
    exactamente la del nudo.

    Raises:
        OutOfDomainError: t fuera de [t_0, t_n]
    """
    times = traj.knot_times
    if not (times[0] <= t <= times[-1]):
        raise OutOfDomainError(t, float(times[0]), float(times[-1]))

    k = int(np.searchsorted(times, t, side="left" if side == "left" else "right")) - 1
    k = min(max(k, 0), traj.segment_count - 1)

    position, velocity, acceleration = _segment_state(traj, k, t - times[k])
    knot = np.flatnonzero(times == t)
    if knot.size:
        position = traj.knot_positions[knot[0]].copy()
    return position, velocity, acceleration


def sample_cartesian(traj: PiecewiseCubicTrajectory, dt: float = DEFAULT_DT):
    """
    Muestrea el spline a paso dt (N + 1 muestras incluyendo ambos extremos).

    Returns:
        (times, positions, velocities)
    """
    if not dt > 0.0:
        raise NonPositiveDurationError(dt)
    steps = max(int(round((traj.t_end - traj.t_start) / dt)), 1)
    times = np.linspace(traj.t_start, traj.t_end, steps + 1)

    poly = _as_ppoly(traj)
    positions = poly(times)
    velocities = poly.derivative()(times)

    # Las muestras que caen sobre un nudo toman su valor exacto
    hits = np.searchsorted(times, traj.knot_times)
    for knot_index, sample_index in enumerate(hits):
        if sample_index < len(times) and times[sample_index] == traj.knot_times[knot_index]:
            positions[sample_index] = traj.knot_positions[knot_index]
            velocities[sample_index] = traj.knot_velocities[knot_index]
    return times, positions, velocities


def linear_interpolation_baseline(path: PiPath, total_time: float, dt: float = DEFAULT_DT, t_start: float = 0.0):
    """
    Comparador lineal a tramos por los mismos puntos y tiempos de nudo.

    Returns:
        (times, positions, velocities); la velocidad salta en cada nudo.
    """
    knots = allocate_knot_times(path.waypoints, total_time, t_start)
    steps = max(int(round(total_time / dt)), 1)
    times = np.linspace(t_start, t_start + total_time, steps + 1)
    positions = np.stack([np.interp(times, knots, path.waypoints[:, axis]) for axis in range(3)], axis=1)

    slopes = np.diff(path.waypoints, axis=0) / np.diff(knots)[:, None]
    segment = np.clip(np.searchsorted(knots, times, side="right") - 1, 0, len(slopes) - 1)
    return times, positions, slopes[segment]


# ==================== ESPACIO ARTICULAR ====================

def _first_bad_sample(params: DeltaParams, positions: np.ndarray, limits: JointLimits) -> int:
    for index, point in enumerate(positions):
        if not is_reachable(params, EefPose.from_array(point), limits):
            return index
    return -1


def plan_pick_place(
    params: DeltaParams,
    path: PiPath,
    total_time: float,
    dt: float = DEFAULT_DT,
    limits: Optional[JointLimits] = None,
    t_start: float = 0.0,
) -> JointTrajectory:
    """
    Planifica la trayectoria y la transforma al espacio articular.

    Muestrea el spline cartesiano cada dt, aplica la cinemática inversa a
    cada muestra y estima las velocidades articulares por diferencias
    centrales. Si recogida y depósito coinciden devuelve una trayectoria
    de espera constante.

    Raises:
        UnreachableWaypointError: Algún punto de paso fuera de alcance
        UnreachableSampleError: Alguna muestra del spline fuera de alcance
    """
    limits = limits or JointLimits()
    if not total_time > 0.0:
        raise NonPositiveDurationError(total_time)
    if not dt > 0.0:
        raise NonPositiveDurationError(dt)

    for index, point in enumerate(path.waypoints):
        if not is_reachable(params, EefPose.from_array(point), limits):
            raise UnreachableWaypointError(index, point)

    if path.is_stationary():
        steps = max(int(round(total_time / dt)), 1)
        times = np.linspace(t_start, t_start + total_time, steps + 1)
        positions = np.repeat(path.waypoints[:1], len(times), axis=0)
        joints = np.repeat(inverse_kinematics_batch(params, positions[:1]), len(times), axis=0)
        zeros = np.zeros_like(positions)
        return JointTrajectory(times, joints, np.zeros_like(joints), positions, zeros, dt)

    cartesian = build_cartesian_trajectory(path, total_time, t_start)
    times, positions, velocities = sample_cartesian(cartesian, dt)

    try:
        joints = inverse_kinematics_batch(params, positions)
        inside = np.all((joints >= limits.theta_min) & (joints <= limits.theta_max), axis=1)
        bad = -1 if inside.all() else int(np.argmin(inside))
    except DomainError:
        bad = _first_bad_sample(params, positions, limits)
    if bad >= 0:
        raise UnreachableSampleError(float(times[bad]), positions[bad])

    joint_velocities = np.gradient(joints, times, axis=0, edge_order=2) if len(times) > 2 else np.zeros_like(joints)
    logger.debug("Trayectoria planificada: %d muestras, %.3f s", len(times), total_time)
    return JointTrajectory(times, joints, joint_velocities, positions, velocities, dt, cartesian)


def tracking_error(params: DeltaParams, trajectory: JointTrajectory) -> np.ndarray:
    """Distancia (mm) por muestra entre la FK de las articulaciones y el spline cartesiano."""
    reconstructed = forward_kinematics_batch(params, trajectory.joints)
    return np.linalg.norm(reconstructed - trajectory.positions, axis=1)


# ==================== EXPORTACIÓN ====================

def write_trajectory_csv(
    stream: TextIO,
    trajectory: JointTrajectory,
    digits: int = 6,
    write_header: bool = True,
) -> int:
    """
    Escribe la trayectoria como CSV: t, x, y, z, vx, vy, vz, th1, th2, th3.

    Returns:
        Número de filas de datos escritas
    """
    writer = csv.writer(stream, lineterminator="\n")
    if write_header:
        writer.writerow(TRAJECTORY_CSV_COLUMNS)
    for t, p, v, th in zip(trajectory.times, trajectory.positions, trajectory.velocities, trajectory.joints):
        writer.writerow([format_float(value, digits) for value in (t, *p, *v, *th)])
    return len(trajectory)


def write_cartesian_csv(stream: TextIO, times, positions, velocities, digits: int = 6) -> int:
    """CSV del comparador lineal (sin columnas articulares)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRAJECTORY_CSV_COLUMNS[:7])
    for t, p, v in zip(times, positions, velocities):
        writer.writerow([format_float(value, digits) for value in (t, *p, *v)])
    return len(times)
