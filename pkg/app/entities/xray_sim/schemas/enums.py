"""
Enums de la escena de rayos X

Heredan de (str, Enum) para serializar directamente a JSON.
"""

from enum import Enum


class BatteryClassEnum(str, Enum):
    """
    Clases de batería que distingue el detector.

    Ejemplo:
        BatteryClassEnum("Button") is BatteryClassEnum.BUTTON  # True
    """
    CYLINDRICAL = "Cylindrical"
    POUCH = "Pouch"
    BUTTON = "Button"
    OTHER = "Other"


class NoiseModeEnum(str, Enum):
    """Modo de conteo de fotones del detector."""
    DETERMINISTIC = "deterministic"   # valor esperado redondeado
    POISSON = "poisson"               # muestreo Poisson con semilla por línea


BATTERY_CLASSES = [c.value for c in BatteryClassEnum]
DEVICE_LABEL = "device"
