"""
Service Layer del escáner de línea de doble energía

La adquisición está sincronizada con el encoder: la línea n se toma en
t_n = n / line_rate y ve la franja x = n·pixel_pitch. Los conteos crudos
incluyen la ganancia de cada pixel; en modo determinista son el valor
esperado redondeado, en modo Poisson se muestrean con un generador propio
de cada línea.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from app.entities.xray_sim.schemas.enums import NoiseModeEnum
from app.entities.xray_sim.schemas.xray_schemas import MAX_COUNTS, LineScan, Scene, ScannerConfig
from app.entities.xray_sim.services.attenuation_service import compile_scene, path_integrals
from app.shared.rng import SeededRNG, line_generator


logger = logging.getLogger(__name__)

# Decimales al convertir índices a mm; absorbe el error de n·0.1 en coma flotante
_POSITION_DECIMALS = 9


def detector_gains(cfg: ScannerConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Ganancia relativa por pixel y banda; todo unos si gain_spread = 0."""
    if cfg.gain_spread == 0.0:
        ones = np.ones(cfg.width_px)
        return ones, ones.copy()
    rng = SeededRNG(cfg.gain_seed).fork("detector-gain").generator
    spread = cfg.gain_spread
    return (
        rng.uniform(1.0 - spread, 1.0 + spread, cfg.width_px),
        rng.uniform(1.0 - spread, 1.0 + spread, cfg.width_px),
    )


def white_reference(cfg: ScannerConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Conteos esperados con la cinta vacía, por pixel y banda.

    Ejemplo:
        low, high = white_reference(ScannerConfig())
        # low == high == 40000.0 en todos los pixels
    """
    gain_low, gain_high = detector_gains(cfg)
    return cfg.i0_low * gain_low, cfg.i0_high * gain_high


def line_positions(first_line: int, count: int, cfg: ScannerConfig) -> np.ndarray:
    lines = np.arange(first_line, first_line + count, dtype=float)
    return np.round(lines * cfg.pixel_pitch, _POSITION_DECIMALS)


def column_positions(cfg: ScannerConfig) -> np.ndarray:
    return np.round(np.arange(cfg.width_px, dtype=float) * cfg.pixel_pitch, _POSITION_DECIMALS)


def _quantize(expected: np.ndarray) -> np.ndarray:
    # Redondeo half-up; expected >= 0
    return np.minimum(np.floor(expected + 0.5), MAX_COUNTS).astype(np.uint16)


class LineScanner:
    """
    Escáner ligado a una escena estática en coordenadas de franja.

    Compila la escena una vez; scan_block es la forma vectorizada que usa
    el bucle de simulación.
    """

    def __init__(self, scene: Scene, cfg: ScannerConfig, noise_seed: Optional[int] = None):
        self.scene = scene
        self.cfg = cfg
        self.noise_seed = cfg.noise_seed if cfg.noise_seed is not None else (noise_seed or 0)
        self._compiled = compile_scene(scene)
        self._columns = column_positions(cfg)
        self._white_low, self._white_high = white_reference(cfg)
        lengths = [
            slab.length
            for device in scene.devices
            for slab in [device, *device.batteries, *device.inclusions]
        ]
        self._max_length = max(lengths, default=0.0)

    @property
    def white(self) -> Tuple[np.ndarray, np.ndarray]:
        return self._white_low, self._white_high

    def expected_at(self, positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Conteos esperados (float) para líneas en las posiciones de franja dadas."""
        mu_low, mu_high = path_integrals(self._compiled, positions, self._columns, self._max_length)
        return self._white_low * np.exp(-mu_low), self._white_high * np.exp(-mu_high)

    def expected_block(self, first_line: int, count: int) -> Tuple[np.ndarray, np.ndarray]:
        return self.expected_at(line_positions(first_line, count, self.cfg))

    def is_blank(self, first_line: int, count: int) -> bool:
        """True si ninguna losa toca las líneas [first_line, first_line + count)."""
        if len(self._compiled) == 0:
            return True
        positions = line_positions(first_line, count, self.cfg)
        start, end = positions[0], positions[-1]
        return not bool(np.any((self._compiled.x_min <= end) & (self._compiled.x_max > start)))

    def scan_block(self, first_line: int, count: int) -> Tuple[np.ndarray, np.ndarray]:
        """Conteos crudos uint16 (count, width_px) por banda."""
        low, high = self.expected_block(first_line, count)
        return self._sample(low, high, first_line)

    def scan_at(self, t: float) -> LineScan:
        """Una línea en un instante arbitrario: la franja visible es v·t."""
        position = np.array([round(self.scene.conveyor_speed * t, _POSITION_DECIMALS)])
        low, high = self.expected_at(position)
        line_index = int(np.floor(t * self.cfg.line_rate + 1e-9))
        low16, high16 = self._sample(low, high, line_index)
        return LineScan(line_index=line_index, timestamp=float(t), low=low16[0], high=high16[0])

    def _sample(self, low: np.ndarray, high: np.ndarray, first_line: int) -> Tuple[np.ndarray, np.ndarray]:
        if self.cfg.noise_mode == NoiseModeEnum.DETERMINISTIC:
            return _quantize(low), _quantize(high)
        out_low = np.empty(low.shape, dtype=np.uint16)
        out_high = np.empty(high.shape, dtype=np.uint16)
        for row in range(low.shape[0]):
            rng = line_generator(self.noise_seed, first_line + row)
            out_low[row] = np.minimum(rng.poisson(low[row]), MAX_COUNTS)
            out_high[row] = np.minimum(rng.poisson(high[row]), MAX_COUNTS)
        return out_low, out_high


# ==================== API FUNCIONAL ====================

def scan_line(scene: Scene, t: float, cfg: ScannerConfig, noise_seed: Optional[int] = None) -> LineScan:
    """
    Adquiere una línea en el instante t.

    Ejemplo:
        line = scan_line(Scene(), 0.0, ScannerConfig())
        # line.low y line.high valen 40000 en todos los pixels
    """
    return LineScanner(scene, cfg, noise_seed).scan_at(t)


def scan_block(
    scene: Scene,
    first_line: int,
    count: int,
    cfg: ScannerConfig,
    noise_seed: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Bloque de líneas consecutivas sincronizadas con el encoder."""
    return LineScanner(scene, cfg, noise_seed).scan_block(first_line, count)


def line_scans(scanner: LineScanner, first_line: int, count: int):
    """Itera LineScan a partir de un bloque, con su marca de tiempo."""
    low, high = scanner.scan_block(first_line, count)
    for row in range(count):
        n = first_line + row
        yield LineScan(line_index=n, timestamp=n / scanner.cfg.line_rate, low=low[row], high=high[row])
