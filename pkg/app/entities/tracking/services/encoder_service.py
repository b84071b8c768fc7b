"""
Encoder rotativo simulado y estimación de velocidad de la cinta
"""

import math
from collections import deque
from typing import Deque, Optional, Tuple

from app.shared.exceptions import NoMotionWindowError


class EncoderModel:
    """
    Contador de ticks muestreado a frecuencia fija.

    Conserva un historial acotado de (t, ticks) suficiente para la ventana
    de estimación más larga que se vaya a pedir.

    Ejemplo:
        enc = EncoderModel(ticks_per_mm=10.0)
        enc.record(0.0, 0.0)
        enc.record(1.0, 350.0)
        speed_from_encoder(enc, 1.0)  # 350.0
    """

    def __init__(self, ticks_per_mm: float = 10.0, sample_hz: float = 100.0, history_s: float = 2.0):
        self.ticks_per_mm = ticks_per_mm
        self.sample_hz = sample_hz
        self._history: Deque[Tuple[float, int]] = deque(maxlen=max(2, int(math.ceil(history_s * sample_hz)) + 2))

    @property
    def samples(self) -> Tuple[Tuple[float, int], ...]:
        return tuple(self._history)

    @property
    def tick_count(self) -> int:
        return self._history[-1][1] if self._history else 0

    @property
    def last_sample_time(self) -> Optional[float]:
        return self._history[-1][0] if self._history else None

    def ticks_for(self, distance_mm: float) -> int:
        return int(math.floor(round(self.ticks_per_mm * distance_mm, 9)))

    def record(self, t: float, distance_mm: float) -> int:
        """Registra la distancia real recorrida por la cinta en t; devuelve el contador."""
        count = max(self.ticks_for(distance_mm), self.tick_count)
        self._history.append((t, count))
        return count

    def record_ticks(self, t: float, count: int) -> None:
        if count < self.tick_count:
            raise ValueError("El contador del encoder no puede decrecer")
        self._history.append((t, int(count)))

    def sample_at_or_before(self, t: float) -> Optional[Tuple[float, int]]:
        """Última muestra con tiempo <= t (None si no hay)."""
        found = None
        for sample in self._history:
            if sample[0] <= t + 1e-9:
                found = sample
            else:
                break
        return found


def speed_from_encoder(enc: EncoderModel, window: float) -> float:
    """
    v = Δticks / (ticks_per_mm · window) sobre la ventana que termina en la última muestra.

    Si el historial todavía no cubre la ventana se usa el tramo disponible.

    Raises:
        NoMotionWindowError: window <= 0
    """
    if not window > 0.0:
        raise NoMotionWindowError(window)
    samples = enc.samples
    if len(samples) < 2:
        return 0.0
    t_end, ticks_end = samples[-1]
    start = enc.sample_at_or_before(t_end - window)
    if start is None:
        start = samples[0]
    t_start, ticks_start = start
    span = t_end - t_start
    if span <= 0.0:
        return 0.0
    # Ventana completa: se divide por la ventana nominal
    effective = window if abs(span - window) <= 1e-9 else span
    return (ticks_end - ticks_start) / (enc.ticks_per_mm * effective)
