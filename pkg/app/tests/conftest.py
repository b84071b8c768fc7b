"""
Configuracion de fixtures para tests
"""
import pytest

from app.entities.detection.schemas.detection_schemas import BoundingBox
from app.entities.kinematics.schemas.kinematics_schemas import DeltaParams, JointLimits
from app.entities.orchestrator.schemas.robot_schemas import RobotConfig
from app.entities.orchestrator.schemas.scenario_schemas import ScenarioConfig
from app.entities.trajectory.schemas.trajectory_schemas import TrajectoryConfig
from app.entities.xray_sim.schemas.enums import BatteryClassEnum
from app.entities.xray_sim.schemas.xray_schemas import (
    BatteryInstance,
    DeviceInstance,
    Scene,
    ScannerConfig,
)


@pytest.fixture
def delta_params():
    """Geometría del robot de referencia."""
    return DeltaParams()


@pytest.fixture
def joint_limits():
    return JointLimits()


@pytest.fixture
def robot_config():
    return RobotConfig()


@pytest.fixture
def trajectory_config():
    """Trayectoria de referencia: 1 s, h = 100 mm, alpha = 0.77."""
    return TrajectoryConfig()


@pytest.fixture
def small_scanner():
    """
    Escáner estrecho para tests rápidos: 400 px a 0.1 mm/px (40 mm de cinta),
    frames de 200 líneas, misma cadencia que el de referencia.
    """
    return ScannerConfig(width_px=400, belt_width=40.0, frame_height_lines=200)


@pytest.fixture
def scanner_config():
    return ScannerConfig()


@pytest.fixture
def single_device_scene():
    """Un dispositivo de 50 mm de largo con una batería tipo pouch."""
    battery = BatteryInstance(
        id="dev-0001-bat", battery_class=BatteryClassEnum.POUCH, material="lithium_cell",
        x_min=110.0, x_max=140.0, y_min=320.0, y_max=360.0, thickness=5.0,
    )
    device = DeviceInstance(
        id="dev-0001", x_min=100.0, x_max=150.0, y_min=300.0, y_max=420.0, thickness=10.0,
        batteries=[battery],
    )
    return Scene(devices=[device])


@pytest.fixture
def small_scenario():
    """Escenario corto con los valores por defecto de la línea de referencia."""
    return ScenarioConfig(n_items=6, battery_fraction=0.5, seed=3)


@pytest.fixture
def make_box():
    """Fábrica de cajas a partir de bordes (x_min, y_min, x_max, y_max)."""
    def _make(x_min, y_min, x_max, y_max, label="device", score=1.0):
        return BoundingBox.from_edges(x_min, y_min, x_max, y_max, label=label, score=score)
    return _make
