from .enums import BatteryClassEnum, NoiseModeEnum, BATTERY_CLASSES, DEVICE_LABEL
from .xray_schemas import (
    Material,
    BatteryInstance,
    InclusionInstance,
    DeviceInstance,
    Scene,
    ScannerConfig,
    LineScan,
    HalfBlock,
    DualEnergyFrame,
    DEFAULT_MATERIALS,
)

__all__ = [
    "BatteryClassEnum",
    "NoiseModeEnum",
    "BATTERY_CLASSES",
    "DEVICE_LABEL",
    "Material",
    "BatteryInstance",
    "InclusionInstance",
    "DeviceInstance",
    "Scene",
    "ScannerConfig",
    "LineScan",
    "HalfBlock",
    "DualEnergyFrame",
    "DEFAULT_MATERIALS",
]
