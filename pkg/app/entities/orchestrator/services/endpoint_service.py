"""
Extremo robot del protocolo: acepta o rechaza órdenes de recogida

La decisión solo depende de los mensajes recibidos (nunca del reloj del
proceso), así que el mismo escenario da las mismas respuestas en proceso
y por TCP.
"""

import logging
import threading
from typing import List, Tuple

from app.entities.orchestrator.schemas.enums import EndpointStateEnum
from app.entities.orchestrator.schemas.robot_schemas import RobotConfig
from app.entities.orchestrator.schemas.wire_schemas import Ack, PickRequest, Reject, Status, WireMessage
from app.entities.orchestrator.services.robot_service import plan_cycle
from app.entities.orchestrator.services.wire_service import decode_message, encode_stream
from app.entities.trajectory.schemas.trajectory_schemas import TrajectoryConfig
from app.shared.exceptions import DomainError, MalformedMessageError


logger = logging.getLogger(__name__)

_TIME_EPS = 1e-9


def pick_point_from_request(request: PickRequest, robot: RobotConfig) -> Tuple[float, float, float]:
    """
    Punto de recogida en el marco del robot: predicción a t_pick trasladada al robot.

    Ejemplo:
        # x0 = 0 mm en t0 = 0, 350 mm/s, t_pick = 2000/350 s
        pick_point_from_request(request, RobotConfig())  # (0.0, y0 - 400, -900.0)
    """
    x_tp = request.x0_mm + request.v_mm_s * (request.t_pick_s - request.t0_stamp_s)
    return robot.to_robot_frame(x_tp, request.y0_mm)


class RobotEndpoint:
    """
    Ejemplo:
        endpoint = RobotEndpoint(RobotConfig(), TrajectoryConfig())
        reply, status = endpoint.handle(request)
    """

    def __init__(self, robot: RobotConfig, trajectory: TrajectoryConfig):
        self.robot = robot
        self.trajectory = trajectory
        self.traj_lead = trajectory.t_total
        self.cycle_time = robot.cycle_time(trajectory.t_total)
        self.busy_until = 0.0
        self.acks = 0
        self.rejects = 0
        self._lock = threading.Lock()

    def _reject_reason(self, request: PickRequest) -> str:
        t_start = request.t_pick_s - self.traj_lead
        if t_start < request.t0_stamp_s:
            return "late"
        if t_start < self.busy_until - _TIME_EPS:
            return "overlap"
        try:
            plan_cycle(self.robot, self.trajectory, pick_point_from_request(request, self.robot), request.t_pick_s)
        except DomainError as e:
            logger.info("Orden %s inalcanzable: %s", request.item_id, e.message)
            return "unreachable"
        return ""

    def handle(self, request: PickRequest) -> List[WireMessage]:
        """Responde exactamente un Ack o Reject seguido de un Status."""
        with self._lock:
            reason = self._reject_reason(request)
            if reason:
                self.rejects += 1
                reply = Reject(item_id=request.item_id, reason=reason)
                logger.info("Rechazada %s: %s", request.item_id, reason)
            else:
                self.acks += 1
                self.busy_until = request.t_pick_s + self.cycle_time
                reply = Ack(item_id=request.item_id)
            busy = self.busy_until > request.t_pick_s - self.traj_lead
            state = EndpointStateEnum.BUSY if busy else EndpointStateEnum.IDLE
            return [reply, Status(robot_state=state, busy_until_s=self.busy_until)]

    def handle_bytes(self, payload: bytes) -> bytes:
        """
        Raises:
            MalformedMessageError: El mensaje no es un PickRequest válido
        """
        message = decode_message(payload)
        if not isinstance(message, PickRequest):
            raise MalformedMessageError(f"se esperaba pick_request, llegó {message.type}", payload=payload)
        return encode_stream(self.handle(message))
