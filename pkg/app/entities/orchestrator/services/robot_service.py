"""
Service Layer del controlador del robot con ventosa

El controlador es una máquina de estados que ejecuta órdenes aceptadas:
sale de reposo t_total antes de t_pick, llega al punto previsto justo en
t_pick, comprueba la succión, transfiere al contenedor, suelta y vuelve
a la pose de reposo. El mundo (objetos sobre la cinta, contenedor y
registro de eventos) llega a través del protocolo RobotWorld.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Deque, List, Optional, Protocol, Sequence, Tuple

from app.entities.kinematics.schemas.kinematics_schemas import EefPose, JointAngles
from app.entities.kinematics.services.kinematics_service import forward_kinematics
from app.entities.orchestrator.schemas.enums import LEGAL_TRANSITIONS, EventTypeEnum, RobotFsmState
from app.entities.orchestrator.schemas.robot_schemas import RobotConfig
from app.entities.orchestrator.schemas.scenario_schemas import Event
from app.entities.trajectory.schemas.trajectory_schemas import JointTrajectory, TrajectoryConfig
from app.entities.trajectory.services.trajectory_service import build_pi_path, plan_pick_place
from app.shared.exceptions import IllegalTransitionError


logger = logging.getLogger(__name__)

_TIME_EPS = 1e-9

Point = Tuple[float, float, float]


# ==================== SUCCIÓN ====================

def grasp_check(eef: EefPose, item_center: Sequence[float], tol: float = 10.0,
                z_tol: float = 5.0, belt_z: float = -900.0) -> bool:
    """
    Contacto de la ventosa: distancia horizontal <= tol y altura sobre la cinta <= z_tol.

    item_center se da en el marco del robot (x, y).

    Ejemplo:
        grasp_check(EefPose(5, 0, -900), (0, 0))   # True
        grasp_check(EefPose(0, 0, -880), (0, 0))   # False: 20 mm sobre la cinta
    """
    horizontal = math.hypot(eef.x - item_center[0], eef.y - item_center[1])
    return horizontal <= tol and abs(eef.z - belt_z) <= z_tol


# ==================== PLANIFICACIÓN DEL CICLO ====================

def plan_leg(robot: RobotConfig, trajectory: TrajectoryConfig, start: Sequence[float],
             end: Sequence[float], duration: float, t_start: float) -> JointTrajectory:
    path = build_pi_path(start, end, trajectory.h, trajectory.alpha)
    return plan_pick_place(robot.params, path, duration, trajectory.dt, robot.limits, t_start)


def plan_cycle(robot: RobotConfig, trajectory: TrajectoryConfig, pick_point: Sequence[float],
               t_pick: float) -> Tuple[JointTrajectory, JointTrajectory]:
    """
    Trayectorias de aproximación (reposo → recogida) y transferencia (recogida → contenedor).

    Raises:
        DomainError: Algún punto o muestra fuera del espacio de trabajo
    """
    approach = plan_leg(robot, trajectory, robot.home_point, pick_point,
                        trajectory.t_total, round(t_pick - trajectory.t_total, 12))
    transfer = plan_leg(robot, trajectory, pick_point, robot.place_point,
                        trajectory.t_total, round(t_pick + robot.grasp_dwell_s, 12))
    return approach, transfer


@dataclass
class RobotJob:
    """Orden aceptada con sus trayectorias ya planificadas."""
    item_id: str
    t_pick: float
    pick_point: Point
    approach: JointTrajectory
    transfer: JointTrajectory

    @property
    def t_start(self) -> float:
        return self.approach.t_start


class RobotWorld(Protocol):
    def try_grasp(self, item_id: str, eef: EefPose, t: float) -> Optional[str]:
        """Devuelve el id del objeto físico succionado o None."""
        ...

    def release(self, physical_id: str, t: float) -> None:
        ...

    def emit(self, event: Event) -> None:
        ...


# ==================== MÁQUINA DE ESTADOS ====================

class RobotController:
    """
    Ejemplo:
        controller = RobotController(RobotConfig(), TrajectoryConfig(), world)
        controller.enqueue("trk-0001", pick_point=(0.0, 12.0, -900.0), t_pick=6.5)
        for k in range(steps):
            controller.step(round(k * dt, 12))
    """

    def __init__(self, robot: RobotConfig, trajectory: TrajectoryConfig, world: RobotWorld):
        self.robot = robot
        self.trajectory = trajectory
        self.world = world
        self.state = RobotFsmState.IDLE
        self.queue: Deque[RobotJob] = deque()
        self.current: Optional[RobotJob] = None
        self.held: Optional[str] = None
        self.gripper_on = False
        self.joints: JointAngles = self._home_joints()
        self.executed: List[Tuple[str, str, JointTrajectory]] = []
        self._active: Optional[JointTrajectory] = None
        self._deadline = 0.0

    def _home_joints(self) -> JointAngles:
        leg = plan_leg(self.robot, self.trajectory, self.robot.home_point, self.robot.home_point,
                       self.robot.homing_s, 0.0)
        return JointAngles.from_array(leg.joints[0])

    @property
    def is_idle(self) -> bool:
        return self.state == RobotFsmState.IDLE and self.current is None and not self.queue

    def enqueue(self, item_id: str, pick_point: Point, t_pick: float) -> RobotJob:
        """
        Planifica y encola una orden aceptada.

        Raises:
            DomainError: La orden no es ejecutable con la geometría del robot
        """
        approach, transfer = plan_cycle(self.robot, self.trajectory, pick_point, t_pick)
        job = RobotJob(item_id, t_pick, tuple(pick_point), approach, transfer)
        self.queue.append(job)
        logger.debug("Orden %s encolada para t=%.3f", item_id, t_pick)
        return job

    # ==================== PASO ====================

    def step(self, t: float) -> None:
        """Avanza la máquina hasta el instante t (puede encadenar varias transiciones)."""
        while self._advance(t):
            pass
        if self._active is not None:
            self.joints = JointAngles.from_array(self._active.joints[self._active.index_at(t)])

    def _advance(self, t: float) -> bool:
        state = self.state
        if state == RobotFsmState.IDLE:
            if self.queue and t >= self.queue[0].t_start - _TIME_EPS:
                self.current = self.queue.popleft()
                self._start_leg(t, RobotFsmState.MOVING_TO_PICK, "approach", self.current.approach)
                return True
            return False

        if t < self._deadline - _TIME_EPS:
            return False

        job = self.current
        if state == RobotFsmState.MOVING_TO_PICK:
            self._grasp(job, job.t_pick)
            return True
        if state == RobotFsmState.GRASPING:
            self._start_leg(self._deadline, RobotFsmState.MOVING_TO_PLACE, "transfer", job.transfer)
            return True
        if state == RobotFsmState.MOVING_TO_PLACE:
            self._transition(self._deadline, RobotFsmState.RELEASING, job.item_id)
            self._active = None
            self._deadline = round(self._deadline + self.robot.release_dwell_s, 12)
            return True
        if state == RobotFsmState.RELEASING:
            self.world.release(self.held, self._deadline)
            self.world.emit(Event(self._deadline, EventTypeEnum.RELEASE, job.item_id, self.held))
            self.held = None
            self.gripper_on = False
            self._home(self._deadline, self.robot.place_point, job.item_id)
            return True
        if state == RobotFsmState.HOMING:
            self._transition(self._deadline, RobotFsmState.IDLE, job.item_id if job else "")
            self.current = None
            self._active = None
            return True
        return False

    def _grasp(self, job: RobotJob, t: float) -> None:
        eef = forward_kinematics(self.robot.params, JointAngles.from_array(job.approach.joints[-1]))
        self.gripper_on = True
        physical = self.world.try_grasp(job.item_id, eef, t)
        self.world.emit(Event(t, EventTypeEnum.GRASP_CHECK, job.item_id, "true" if physical else "false"))
        if physical is None:
            self.gripper_on = False
            logger.info("Succión fallida para %s en t=%.3f", job.item_id, t)
            self._home(t, job.pick_point, job.item_id)
            return
        self.held = physical
        self._transition(t, RobotFsmState.GRASPING, job.item_id)
        self._active = None
        self._deadline = round(t + self.robot.grasp_dwell_s, 12)

    def _home(self, t: float, start: Point, item_id: str) -> None:
        leg = plan_leg(self.robot, self.trajectory, start, self.robot.home_point, self.robot.homing_s, t)
        self._start_leg(t, RobotFsmState.HOMING, "homing", leg, item_id)

    def _start_leg(self, t: float, state: RobotFsmState, leg_name: str, leg: JointTrajectory,
                   item_id: Optional[str] = None) -> None:
        item_id = item_id or self.current.item_id
        self._transition(t, state, item_id)
        self._active = leg
        self._deadline = leg.t_end
        self.executed.append((item_id, leg_name, leg))

    def _transition(self, t: float, target: RobotFsmState, item_id: str) -> None:
        if target not in LEGAL_TRANSITIONS[self.state]:
            raise IllegalTransitionError(self.state.value, target.value)
        self.world.emit(Event(t, EventTypeEnum.TRANSITION, item_id, f"{self.state.value}->{target.value}"))
        self.state = target

