from .enums import (
    EventTypeEnum,
    ItemLocationEnum,
    ItemOutcomeEnum,
    LEGAL_TRANSITIONS,
    MissReasonEnum,
    RobotFsmState,
)
from .robot_schemas import RobotConfig, DEFAULT_HOME_POINT
from .scenario_schemas import Event, ItemTiming, ScenarioConfig, ScenarioReport
from .wire_schemas import Ack, PickRequest, Reject, Status, WireMessage

__all__ = [
    "EventTypeEnum",
    "ItemLocationEnum",
    "ItemOutcomeEnum",
    "LEGAL_TRANSITIONS",
    "MissReasonEnum",
    "RobotFsmState",
    "RobotConfig",
    "DEFAULT_HOME_POINT",
    "Event",
    "ItemTiming",
    "ScenarioConfig",
    "ScenarioReport",
    "Ack",
    "PickRequest",
    "Reject",
    "Status",
    "WireMessage",
]
