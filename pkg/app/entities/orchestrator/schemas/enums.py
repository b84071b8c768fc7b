"""
Enums del orquestador
"""

from enum import Enum
from typing import Dict, FrozenSet


class RobotFsmState(str, Enum):
    """Estados del controlador del robot."""
    IDLE = "Idle"
    MOVING_TO_PICK = "MovingToPick"
    GRASPING = "Grasping"
    MOVING_TO_PLACE = "MovingToPlace"
    RELEASING = "Releasing"
    HOMING = "Homing"


class EndpointStateEnum(str, Enum):
    """Ocupación que el extremo robot anuncia en cada Status."""
    IDLE = "Idle"
    BUSY = "Busy"


# Cualquier estado puede abortar hacia Homing
LEGAL_TRANSITIONS: Dict[RobotFsmState, FrozenSet[RobotFsmState]] = {
    RobotFsmState.IDLE: frozenset({RobotFsmState.MOVING_TO_PICK, RobotFsmState.HOMING}),
    RobotFsmState.MOVING_TO_PICK: frozenset({RobotFsmState.GRASPING, RobotFsmState.HOMING}),
    RobotFsmState.GRASPING: frozenset({RobotFsmState.MOVING_TO_PLACE, RobotFsmState.HOMING}),
    RobotFsmState.MOVING_TO_PLACE: frozenset({RobotFsmState.RELEASING, RobotFsmState.HOMING}),
    RobotFsmState.RELEASING: frozenset({RobotFsmState.HOMING}),
    RobotFsmState.HOMING: frozenset({RobotFsmState.IDLE}),
}


class ItemLocationEnum(str, Enum):
    """Dónde está un objeto físico: exactamente uno de estos a la vez."""
    PENDING = "pending"       # aún no ha entrado en la cinta
    ON_BELT = "on_belt"
    HELD = "held"
    IN_BIN = "in_bin"
    EXITED = "exited"


class ItemOutcomeEnum(str, Enum):
    SORTED_TO_BIN = "sorted_to_bin"
    MISSED = "missed"
    WRONG_PICK = "wrong_pick"
    PASS_THROUGH = "pass_through"


class MissReasonEnum(str, Enum):
    INFEASIBLE = "infeasible"
    REJECTED = "rejected"
    GRASP_FAILED = "grasp_failed"
    NOT_DETECTED = "not_detected"


class EventTypeEnum(str, Enum):
    SPAWN = "spawn"
    FRAME = "frame"
    DETECTED = "detected"
    INFEASIBLE = "infeasible"
    PICK_REQUEST = "pick_request"
    ACK = "ack"
    REJECT = "reject"
    TRANSITION = "transition"
    GRASP_CHECK = "grasp_check"
    RELEASE = "release"
    EXIT = "exit"
