"""
Atenuación de Beer-Lambert y proyección de la escena sobre el detector

Las losas (dispositivo, baterías, componentes) se compilan en arrays
ordenados por x_min para que el barrido de bloques de líneas sea un
recorte por rangos en lugar de una prueba objeto a objeto por línea.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from app.entities.xray_sim.schemas.xray_schemas import Scene


def attenuate(i0, mu_x_sum):
    """
    I = I0·exp(-Σ μ_j x_j). Acepta escalares o arrays.

    Ejemplo:
        attenuate(40000, math.log(2))  # 20000.0
    """
    result = np.asarray(i0, dtype=float) * np.exp(-np.asarray(mu_x_sum, dtype=float))
    return float(result) if np.ndim(result) == 0 else result


@dataclass(frozen=True, eq=False)
class CompiledScene:
    """Losas de la escena en forma columnar, ordenadas por x_min."""
    x_min: np.ndarray
    x_max: np.ndarray
    y_min: np.ndarray
    y_max: np.ndarray
    mu_x_low: np.ndarray
    mu_x_high: np.ndarray

    def __len__(self) -> int:
        return int(self.x_min.shape[0])


def compile_scene(scene: Scene) -> CompiledScene:
    rows = []
    for device in scene.devices:
        for slab in [device, *device.batteries, *device.inclusions]:
            material = scene.material(slab.material)
            rows.append((
                slab.x_min, slab.x_max, slab.y_min, slab.y_max,
                material.mu_low * slab.thickness, material.mu_high * slab.thickness,
            ))
    table = np.asarray(rows, dtype=float).reshape(-1, 6)
    table = table[np.argsort(table[:, 0], kind="stable")]
    return CompiledScene(*(np.ascontiguousarray(table[:, k]) for k in range(6)))


def path_integrals(
    compiled: CompiledScene,
    positions: np.ndarray,
    columns: np.ndarray,
    max_length: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Σ μ·x por línea y pixel para ambas bandas.

    Args:
        positions: (L,) coordenada de franja de cada línea, creciente
        columns: (W,) coordenada y de cada pixel, creciente
        max_length: cota superior de x_max - x_min de cualquier losa

    Returns:
        (low, high), cada uno (L, W)
    """
    positions = np.asarray(positions, dtype=float)
    low = np.zeros((positions.shape[0], columns.shape[0]))
    high = np.zeros_like(low)
    if len(compiled) == 0 or positions.shape[0] == 0:
        return low, high

    # Una losa solo puede tocar el bloque si x_min está en (s0 - max_length, s_last]
    first = int(np.searchsorted(compiled.x_min, positions[0] - max_length, side="left"))
    last = int(np.searchsorted(compiled.x_min, positions[-1], side="right"))
    for k in range(first, last):
        r0 = int(np.searchsorted(positions, compiled.x_min[k], side="left"))
        r1 = int(np.searchsorted(positions, compiled.x_max[k], side="left"))
        if r1 <= r0:
            continue
        c0 = int(np.searchsorted(columns, compiled.y_min[k], side="left"))
        c1 = int(np.searchsorted(columns, compiled.y_max[k], side="left"))
        if c1 <= c0:
            continue
        low[r0:r1, c0:c1] += compiled.mu_x_low[k]
        high[r0:r1, c0:c1] += compiled.mu_x_high[k]
    return low, high
