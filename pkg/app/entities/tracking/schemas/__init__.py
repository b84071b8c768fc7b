from .tracking_schemas import (
    DEFAULT_PLACE_POINT,
    PickCommand,
    SchedulingDecision,
    TrackingConfig,
    WorldItem,
)

__all__ = ["DEFAULT_PLACE_POINT", "PickCommand", "SchedulingDecision", "TrackingConfig", "WorldItem"]
