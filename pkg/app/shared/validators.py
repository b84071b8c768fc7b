"""
Validadores reutilizables para diferentes tipos de datos

Este módulo contiene validadores que pueden ser reutilizados
en múltiples schemas Pydantic. Lanzan ValueError para que Pydantic
los envuelva en su ValidationError.
"""

import math
from typing import Optional, Sequence


# ==================== VALIDADORES NUMÉRICOS ====================

def validate_positive(value: float, field_name: str = "Campo") -> float:
    """
    Valida que un número sea finito y estrictamente positivo.

    Ejemplo en schema:
        @validator('line_rate')
        def validate_line_rate(cls, v):
            return validate_positive(v, "line_rate")
    """
    if value is None or not math.isfinite(value) or value <= 0:
        raise ValueError(f"{field_name} debe ser un número finito > 0 (recibido {value})")
    return value


def validate_non_negative(value: float, field_name: str = "Campo") -> float:
    """Valida que un número sea finito y >= 0."""
    if value is None or not math.isfinite(value) or value < 0:
        raise ValueError(f"{field_name} debe ser un número finito >= 0 (recibido {value})")
    return value


def validate_range(
    value: float,
    min_value: Optional[float] = None,
    max_value: Optional[float] = None,
    field_name: str = "Valor"
) -> float:
    """
    Valida que un número esté dentro de un rango cerrado.

    Args:
        value: Valor a validar
        min_value: Mínimo permitido (inclusive)
        max_value: Máximo permitido (inclusive)
        field_name: Nombre del campo para mensajes de error

    Returns:
        El mismo valor

    Raises:
        ValueError: Si está fuera de rango o no es finito
    """
    if value is None or not math.isfinite(value):
        raise ValueError(f"{field_name} debe ser un número finito")
    if min_value is not None and value < min_value:
        raise ValueError(f"{field_name} debe ser mayor o igual a {min_value}")
    if max_value is not None and value > max_value:
        raise ValueError(f"{field_name} debe ser menor o igual a {max_value}")
    return value


def validate_unit_interval(value: float, field_name: str = "Valor") -> float:
    """Atajo para valores en [0, 1] (fracciones, scores, alpha)."""
    return validate_range(value, 0.0, 1.0, field_name)


def validate_finite_vector(values: Sequence[float], length: int, field_name: str = "Vector") -> tuple:
    """
    Valida un vector de longitud fija con componentes finitas.

    Ejemplo:
        validate_finite_vector((0, -400, -900), 3, "place_point")
    """
    values = tuple(float(v) for v in values)
    if len(values) != length:
        raise ValueError(f"{field_name} debe tener {length} componentes (recibido {len(values)})")
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"{field_name} contiene valores no finitos")
    return values


# ==================== VALIDADORES DE STRINGS ====================

def validate_non_empty_string(value: str, field_name: str = "Campo") -> str:
    """
    Valida que un string no esté vacío y lo normaliza.

    Returns:
        String sin espacios al inicio/fin
    """
    if value is None:
        raise ValueError(f'{field_name} es requerido')
    value = str(value).strip()
    if not value:
        raise ValueError(f'{field_name} no puede estar vacío')
    return value
