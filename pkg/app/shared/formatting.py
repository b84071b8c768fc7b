"""Formato numérico estable para artefactos de texto (CSV, salida de CLI)."""

from typing import Iterable


def format_float(value: float, digits: int = 6) -> str:
    """
    Redondea a `digits` decimales y normaliza el cero negativo.

    Ejemplo:
        format_float(-0.0000001)  # "0.000000"
    """
    text = f"{float(value):.{digits}f}"
    if text.startswith("-") and float(text) == 0.0:
        text = text[1:]
    return text


def format_row(values: Iterable[float], digits: int = 6, sep: str = " ") -> str:
    return sep.join(format_float(v, digits) for v in values)
