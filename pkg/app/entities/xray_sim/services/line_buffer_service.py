"""
Buffer rodante de líneas con emisión de frames solapados al 50%

El buffer trabaja en mitades de frame_height_lines/2 líneas: el frame k
son las mitades k y k+1, así que la mitad inferior de un frame es
exactamente la superior del siguiente. Cada mitad se procesa una sola vez.

Además de push_line (línea a línea) admite push_half con un renderizador
diferido: el bucle de simulación solo calcula los pixels de los frames que
alguien llega a leer.
"""

import logging
import math
from collections import deque
from typing import Callable, Iterator, List, Optional, Tuple

import numpy as np

from app.entities.xray_sim.schemas.enums import NoiseModeEnum
from app.entities.xray_sim.schemas.xray_schemas import (
    DualEnergyFrame,
    HalfBlock,
    LineScan,
    Scene,
    ScannerConfig,
)
from app.entities.xray_sim.services.processing_service import process_block
from app.entities.xray_sim.services.scanner_service import LineScanner
from app.shared.exceptions import MalformedInputError


logger = logging.getLogger(__name__)

RawRenderer = Callable[[], Tuple[np.ndarray, np.ndarray]]


class LineBuffer:
    """
    Ejemplo:
        buffer = LineBuffer(cfg, white_low, white_high)
        for line in lines:
            frame = buffer.push_line(line)
            if frame is not None:
                ...
    """

    def __init__(self, cfg: ScannerConfig, white_low: np.ndarray, white_high: np.ndarray):
        self.cfg = cfg
        self.white_low = np.asarray(white_low, dtype=float)
        self.white_high = np.asarray(white_high, dtype=float)
        self._halves: deque = deque(maxlen=2)
        self._pending_low: List[np.ndarray] = []
        self._pending_high: List[np.ndarray] = []
        self._pending_first: Optional[int] = None
        self._next_line: Optional[int] = None
        self._blank_bands: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self.frames_emitted = 0
        self.lines_pushed = 0

    @property
    def pending_lines(self) -> int:
        return len(self._pending_low)

    # ==================== ENTRADA LÍNEA A LÍNEA ====================

    def push_line(self, line: LineScan) -> Optional[DualEnergyFrame]:
        """Añade una línea; devuelve un frame cuando se completa una mitad con otra previa."""
        width = self.cfg.width_px
        if line.low.shape != (width,) or line.high.shape != (width,):
            raise MalformedInputError("line_scan", f"ancho {line.low.shape} distinto de {width}")
        if self._pending_first is None:
            self._pending_first = line.line_index
        self._pending_low.append(line.low)
        self._pending_high.append(line.high)
        self.lines_pushed += 1
        if len(self._pending_low) < self.cfg.half_height:
            return None

        low = np.vstack(self._pending_low)
        high = np.vstack(self._pending_high)
        first = self._pending_first
        self._pending_low, self._pending_high, self._pending_first = [], [], None
        return self._append_half(first, lambda: self._process(low, high))

    # ==================== ENTRADA POR MITADES ====================

    def push_half(self, first_line: int, render: RawRenderer, blank: bool = False) -> Optional[DualEnergyFrame]:
        """
        Añade una mitad completa cuyos conteos crudos se calculan bajo demanda.

        blank=True reutiliza el procesado de una mitad vacía ya calculada;
        solo es válido si los conteos crudos no dependen de la línea
        (modo determinista).
        """
        if self._pending_low:
            raise MalformedInputError("line_buffer", "push_half con líneas sueltas pendientes")
        self.lines_pushed += self.cfg.half_height
        if blank:
            return self._append_half(first_line, lambda: self._blank(render))
        return self._append_half(first_line, lambda: self._process(*render()))

    # ==================== INTERNOS ====================

    def _process(self, low16: np.ndarray, high16: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return process_block(low16, high16, self.white_low, self.white_high, self.cfg.bin_factor)

    def _blank(self, render: RawRenderer) -> Tuple[np.ndarray, np.ndarray]:
        if self._blank_bands is None:
            self._blank_bands = self._process(*render())
        te, he = self._blank_bands
        return te.copy(), he.copy()

    def _append_half(self, first_line: int, source) -> Optional[DualEnergyFrame]:
        if self._next_line is not None and first_line != self._next_line:
            logger.warning("Salto en la secuencia de líneas: esperada %d, recibida %d", self._next_line, first_line)
            self._halves.clear()
        self._next_line = first_line + self.cfg.half_height

        t_first = first_line / self.cfg.line_rate
        self._halves.append(HalfBlock(
            first_line=first_line,
            line_count=self.cfg.half_height,
            t_first=t_first,
            source=source,
        ))
        if len(self._halves) < 2:
            return None
        return self._emit()

    def _emit(self) -> DualEnergyFrame:
        cfg = self.cfg
        top, bottom = self._halves[0], self._halves[1]
        frame = DualEnergyFrame(
            frame_index=self.frames_emitted,
            first_line=top.first_line,
            origin=round(top.first_line * cfg.pixel_pitch, 9),
            t_first=top.t_first,
            row_period=cfg.bin_factor / cfg.line_rate,
            mm_per_px=cfg.pixel_pitch * cfg.bin_factor,
            height=cfg.frame_height_lines // cfg.bin_factor,
            width=cfg.width_px // cfg.bin_factor,
            halves=(top, bottom),
        )
        self.frames_emitted += 1
        logger.debug("Frame %d emitido (líneas %d..%d)", frame.frame_index, top.first_line,
                     top.first_line + cfg.frame_height_lines - 1)
        return frame


# ==================== ESCENA COMPLETA ====================

def push_scanned_half(buffer: LineBuffer, scanner: LineScanner, first_line: int) -> Optional[DualEnergyFrame]:
    """Empuja la mitad que empieza en first_line, reutilizando la mitad vacía si el modo lo permite."""
    half = buffer.cfg.half_height
    blank = scanner.cfg.noise_mode == NoiseModeEnum.DETERMINISTIC and scanner.is_blank(first_line, half)
    return buffer.push_half(first_line, lambda: scanner.scan_block(first_line, half), blank=blank)


def scan_scene(scene: Scene, cfg: ScannerConfig, noise_seed: Optional[int] = None) -> Iterator[DualEnergyFrame]:
    """
    Frames de una escena estática desde la línea 0 hasta que el último
    dispositivo ha pasado por completo por la mitad superior de un frame.

    Ejemplo:
        frames = list(scan_scene(load_scene("scene.json"), ScannerConfig()))
    """
    scanner = LineScanner(scene, cfg, noise_seed)
    buffer = LineBuffer(cfg, *scanner.white)
    half = cfg.half_height
    end_mm = max((device.x_max for device in scene.devices), default=0.0)
    last_line = int(math.ceil(end_mm / cfg.pixel_pitch)) + half
    for first_line in range(0, last_line + 1, half):
        frame = push_scanned_half(buffer, scanner, first_line)
        if frame is not None:
            yield frame
