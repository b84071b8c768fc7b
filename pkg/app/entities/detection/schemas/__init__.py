from .detection_schemas import (
    BoundingBox,
    ClassMetrics,
    DetectionConfig,
    DetectionRecord,
    DetectorModeEnum,
    DeviceReport,
    MetricsReport,
)

__all__ = [
    "BoundingBox",
    "ClassMetrics",
    "DetectionConfig",
    "DetectionRecord",
    "DetectorModeEnum",
    "DeviceReport",
    "MetricsReport",
]
