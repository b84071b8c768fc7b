"""
Generación reproducible de la escena de un escenario

Cada dispositivo se genera con su propio generador hijo, de modo que el
dispositivo i es el mismo para una semilla dada sin importar cuántos
dispositivos tenga el escenario.
"""

import logging
from typing import Dict, Tuple

from app.entities.orchestrator.schemas.scenario_schemas import (
    BATTERY_MARGIN_MM,
    BELT_EDGE_MARGIN_MM,
    ScenarioConfig,
)
from app.entities.xray_sim.schemas.enums import BatteryClassEnum
from app.entities.xray_sim.schemas.xray_schemas import (
    BatteryInstance,
    DeviceInstance,
    InclusionInstance,
    Scene,
)
from app.shared.rng import SeededRNG


logger = logging.getLogger(__name__)

# (largo, ancho, espesor) en mm de cada clase de batería
BATTERY_DIMENSIONS: Dict[BatteryClassEnum, Tuple[float, float, float]] = {
    BatteryClassEnum.CYLINDRICAL: (65.0, 18.0, 18.0),
    BatteryClassEnum.POUCH: (60.0, 40.0, 5.0),
    BatteryClassEnum.BUTTON: (12.0, 12.0, 3.0),
    BatteryClassEnum.OTHER: (50.0, 25.0, 8.0),
}
PCB_THICKNESS_MM = 1.6


def device_id(index: int) -> str:
    return f"dev-{index + 1:04d}"


def battery_assignment(cfg: ScenarioConfig, seed: int) -> set:
    """Índices de los dispositivos con batería: floor(n·f + 0.5) elegidos por permutación."""
    order = SeededRNG(seed).fork("scene").fork("battery-assign").permutation(cfg.n_items)
    return {int(i) for i in order[:cfg.battery_count()]}


def _battery_footprint(rng: SeededRNG, battery_class: BatteryClassEnum) -> Tuple[float, float, float]:
    length, width, thickness = BATTERY_DIMENSIONS[battery_class]
    # Las celdas cilíndricas caen en cualquiera de las dos orientaciones
    if battery_class == BatteryClassEnum.CYLINDRICAL and rng.random() < 0.5:
        length, width = width, length
    return length, width, thickness


def generate_device(index: int, has_battery: bool, rng: SeededRNG, cfg: ScenarioConfig) -> DeviceInstance:
    """
    Un dispositivo de plástico con batería opcional y PCB opcional.

    x_min = v·i·headway + spawn_distance: el borde delantero aparece
    spawn_distance aguas arriba del detector en t = i·headway.
    """
    dev_id = device_id(index)
    length = rng.uniform(*cfg.device_length_mm)
    width = rng.uniform(*cfg.device_width_mm)
    thickness = rng.uniform(*cfg.device_thickness_mm)

    battery_shape = None
    if has_battery:
        battery_class = rng.choice(list(BatteryClassEnum))
        battery_shape = (battery_class, *_battery_footprint(rng, battery_class))
        length = max(length, battery_shape[1] + 2.0 * BATTERY_MARGIN_MM)
        width = max(width, battery_shape[2] + 2.0 * BATTERY_MARGIN_MM)

    x_min = cfg.conveyor_speed * index * cfg.spawn_headway_s + cfg.spawn_distance_mm
    x_max = x_min + length
    belt_width = cfg.scanner.belt_width
    y_center = rng.uniform(width / 2.0 + BELT_EDGE_MARGIN_MM, belt_width - width / 2.0 - BELT_EDGE_MARGIN_MM)
    y_min, y_max = y_center - width / 2.0, y_center + width / 2.0

    batteries = []
    if battery_shape is not None:
        battery_class, b_len, b_wid, b_thk = battery_shape
        bx = rng.uniform(x_min + BATTERY_MARGIN_MM, x_max - BATTERY_MARGIN_MM - b_len)
        by = rng.uniform(y_min + BATTERY_MARGIN_MM, y_max - BATTERY_MARGIN_MM - b_wid)
        batteries.append(BatteryInstance(
            id=f"{dev_id}-bat", battery_class=battery_class,
            x_min=bx, x_max=bx + b_len, y_min=by, y_max=by + b_wid, thickness=b_thk,
        ))

    inclusions = []
    if rng.random() < cfg.pcb_probability:
        p_len = length * rng.uniform(0.3, 0.6)
        p_wid = width * rng.uniform(0.3, 0.6)
        px = rng.uniform(x_min, x_max - p_len)
        py = rng.uniform(y_min, y_max - p_wid)
        inclusions.append(InclusionInstance(
            id=f"{dev_id}-pcb", x_min=px, x_max=px + p_len, y_min=py, y_max=py + p_wid,
            thickness=PCB_THICKNESS_MM,
        ))

    return DeviceInstance(
        id=dev_id, x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max, thickness=thickness,
        batteries=batteries, inclusions=inclusions,
    )


def generate_scene(cfg: ScenarioConfig, seed: int) -> Scene:
    """
    Ejemplo:
        scene = generate_scene(ScenarioConfig(n_items=120, battery_fraction=0.7), seed=0)
        sum(d.has_battery for d in scene.devices)  # 84
    """
    root = SeededRNG(seed).fork("scene")
    with_battery = battery_assignment(cfg, seed)
    devices = [
        generate_device(i, i in with_battery, root.fork(f"dev{i:05d}"), cfg)
        for i in range(cfg.n_items)
    ]
    logger.info("Escena generada: %d dispositivos, %d con batería", len(devices), len(with_battery))
    return Scene(conveyor_speed=cfg.conveyor_speed, belt_width=cfg.scanner.belt_width, devices=devices)
