"""
Procesado de imagen del escáner: flat-field, binning y conversión a 8 bits

Todas las funciones operan sobre arrays (una línea o un bloque de líneas)
y redondean half-up.
"""

from typing import Optional, Tuple, Union

import numpy as np

from app.entities.xray_sim.schemas.xray_schemas import MAX_COUNTS, LineScan
from app.shared.exceptions import NonDivisibleShapeError, ZeroWhiteReferenceError


ArrayLike = Union[np.ndarray, list]


def _round_half_up(values: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(values, dtype=float) + 0.5)


# ==================== FLAT-FIELD ====================

def flat_field_counts(counts: np.ndarray, white_ref: ArrayLike) -> np.ndarray:
    """
    Corrige la ganancia por pixel: v·mean(white_ref)/white_ref[p].

    counts puede ser (W,) o (L, W); el resultado es uint16 saturado.

    Raises:
        ZeroWhiteReferenceError: Algún pixel de referencia <= 0
    """
    white = np.asarray(white_ref, dtype=float)
    bad = np.flatnonzero(~(white > 0.0))
    if bad.size:
        raise ZeroWhiteReferenceError(int(bad[0]))
    gains = white.mean() / white
    corrected = _round_half_up(np.asarray(counts, dtype=float) * gains)
    return np.minimum(corrected, MAX_COUNTS).astype(np.uint16)


def flat_field(raw: LineScan, white_low: ArrayLike, white_high: Optional[ArrayLike] = None) -> LineScan:
    """
    Normaliza ambas bandas de una línea. Sin white_high se usa white_low.

    Ejemplo:
        flat_field(line, np.full(8000, 40000.0))  # identidad
    """
    white_high = white_low if white_high is None else white_high
    return LineScan(
        line_index=raw.line_index,
        timestamp=raw.timestamp,
        low=flat_field_counts(raw.low, white_low),
        high=flat_field_counts(raw.high, white_high),
    )


# ==================== BINNING ====================

def bin_pixels(frame16: np.ndarray, factor: int) -> np.ndarray:
    """
    Media redondeada de bloques factor×factor.

    Ejemplo:
        bin_pixels(np.ones((8, 8), dtype=np.uint16), 4).shape  # (2, 2)

    Raises:
        NonDivisibleShapeError: factor no divide alto y ancho
    """
    frame16 = np.asarray(frame16)
    if factor < 1 or frame16.ndim != 2 or frame16.shape[0] % factor or frame16.shape[1] % factor:
        raise NonDivisibleShapeError(frame16.shape, factor)
    if factor == 1:
        return frame16.copy()
    rows, cols = frame16.shape
    blocks = frame16.astype(float).reshape(rows // factor, factor, cols // factor, factor)
    return _round_half_up(blocks.mean(axis=(1, 3))).astype(frame16.dtype)


# ==================== 8 BITS ====================

def to_8bit(frame16: np.ndarray, white_level: float) -> np.ndarray:
    """
    round(255·min(v/white_level, 1)) por pixel.

    Ejemplo:
        to_8bit(np.array([20000]), 40000.0)  # array([128], dtype=uint8)
    """
    ratio = np.minimum(np.asarray(frame16, dtype=float) / float(white_level), 1.0)
    return _round_half_up(255.0 * ratio).astype(np.uint8)


def total_energy(low16: np.ndarray, high16: np.ndarray) -> np.ndarray:
    """Canal TE: suma de ambas bandas, sin saturar (int32)."""
    return np.asarray(low16, dtype=np.int32) + np.asarray(high16, dtype=np.int32)


def white_levels(white_low: ArrayLike, white_high: ArrayLike) -> Tuple[float, float]:
    """Nivel de blanco (TE, HE) tras flat-field: la media de la referencia."""
    high = float(np.mean(white_high))
    return float(np.mean(white_low)) + high, high


def process_block(
    low16: np.ndarray,
    high16: np.ndarray,
    white_low: ArrayLike,
    white_high: ArrayLike,
    bin_factor: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cadena completa de un bloque de líneas crudas: flat-field → TE → binning → 8 bits.

    Returns:
        (te8, he8)
    """
    low = flat_field_counts(low16, white_low)
    high = flat_field_counts(high16, white_high)
    te = total_energy(low, high)
    if bin_factor > 1:
        te = bin_pixels(te, bin_factor)
        high = bin_pixels(high, bin_factor)
    te_white, he_white = white_levels(white_low, white_high)
    return to_8bit(te, te_white), to_8bit(high, he_white)
