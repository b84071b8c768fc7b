"""
Excepciones personalizadas para el simulador

Este módulo define excepciones específicas del dominio que proporcionan
información clara sobre errores de entrada y de dominio, y facilitan
el manejo de errores entre capas. La CLI traduce cada familia a su
código de salida igual que un router traduce excepciones a status HTTP:

- InputError  -> exit 2 (configuración o entrada inválida)
- DomainError -> exit 3 (inalcanzable, infactible, geometría degenerada)
"""

from typing import Optional, Dict, Any, Sequence


EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_DOMAIN_ERROR = 3


class BaseAppException(Exception):
    """
    Excepción base para toda la aplicación.

    Todas las excepciones custom deben heredar de esta clase
    para mantener consistencia en el manejo de errores.
    """

    def __init__(
        self,
        message: str,
        exit_code: int = 1,
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


def _as_list(values: Sequence[float]) -> list:
    return [float(v) for v in values]


# ==================== EXCEPCIONES DE ENTRADA (exit 2) ====================

class InputError(BaseAppException):
    """Raíz de los errores de configuración o de datos de entrada."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=EXIT_INPUT_ERROR, details=details)


class ConfigInvalidError(InputError):
    """
    Se lanza cuando la configuración del escenario no pasa validación.

    Ejemplo:
        raise ConfigInvalidError("battery_fraction fuera de rango", {"battery_fraction": 1.5})
    """


class MalformedInputError(InputError):
    """
    Se lanza cuando un archivo de entrada (escena, registros, frames) está mal formado.

    Ejemplo:
        raise MalformedInputError("preds.json", "falta 'frame_index'")
    """

    def __init__(self, source: str, reason: str):
        super().__init__(f"Entrada mal formada en {source}: {reason}", details={
            "source": source,
            "reason": reason
        })


class MalformedMessageError(InputError):
    """
    Se lanza cuando un mensaje del protocolo no se puede decodificar.

    Ejemplo:
        raise MalformedMessageError("falta t_pick_s", payload=b'{"type": "pick_request"}')
    """

    def __init__(self, reason: str, payload: Any = None):
        shown = payload.decode("utf-8", "replace") if isinstance(payload, bytes) else payload
        super().__init__(f"Mensaje mal formado: {reason}", details={
            "reason": reason,
            "payload": shown
        })


class InvalidAlphaError(InputError):
    """
    Se lanza cuando el factor de curvatura está fuera de [0, 1].

    Ejemplo:
        raise InvalidAlphaError(1.2)
    """

    def __init__(self, alpha: float):
        super().__init__(f"alpha={alpha} fuera de [0, 1]", details={"alpha": alpha})


class NonPositiveOffsetError(InputError):
    """Se lanza cuando la altura h de la trayectoria Pi no es positiva."""

    def __init__(self, h: float):
        super().__init__(f"El offset vertical h={h} debe ser > 0", details={"h": h})


class NonPositiveDurationError(InputError):
    """Se lanza cuando la duración de un segmento cúbico no es positiva."""

    def __init__(self, duration: float):
        super().__init__(f"Duración de segmento {duration} debe ser > 0", details={
            "duration": duration
        })


class NonDivisibleShapeError(InputError):
    """
    Se lanza cuando el factor de binning no divide la forma de la imagen.

    Ejemplo:
        raise NonDivisibleShapeError((10, 8), 4)
    """

    def __init__(self, shape: Sequence[int], factor: int):
        super().__init__(f"Forma {tuple(shape)} no divisible por factor {factor}", details={
            "shape": list(shape),
            "factor": factor
        })


class ZeroWhiteReferenceError(InputError):
    """Se lanza cuando la referencia de blanco tiene algún pixel <= 0."""

    def __init__(self, pixel_index: int):
        super().__init__(f"Referencia de blanco no positiva en pixel {pixel_index}", details={
            "pixel_index": pixel_index
        })


class EmptyMaskError(InputError):
    """Se lanza al pedir la caja envolvente de una máscara vacía."""

    def __init__(self):
        super().__init__("La máscara no contiene pixeles")


class OutOfDomainError(InputError):
    """
    Se lanza al evaluar una trayectoria fuera de [t_0, t_n].

    Ejemplo:
        raise OutOfDomainError(1.5, 0.0, 1.0)
    """

    def __init__(self, t: float, t_start: float, t_end: float):
        super().__init__(f"t={t} fuera del dominio [{t_start}, {t_end}]", details={
            "t": t,
            "t_start": t_start,
            "t_end": t_end
        })


class NoMotionWindowError(InputError):
    """Se lanza cuando la ventana de estimación de velocidad es nula."""

    def __init__(self, window: float):
        super().__init__(f"Ventana de velocidad {window} s debe ser > 0", details={
            "window": window
        })


# ==================== EXCEPCIONES DE DOMINIO (exit 3) ====================

class DomainError(BaseAppException):
    """Raíz de los errores de dominio: geometría, alcance, factibilidad."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=EXIT_DOMAIN_ERROR, details=details)


class UnreachableError(DomainError):
    """
    Se lanza cuando la cinemática inversa no tiene solución para un brazo.

    Ejemplo:
        raise UnreachableError((0.0, 0.0, -2000.0), arm=0)
    """

    def __init__(self, pose: Sequence[float], arm: int):
        super().__init__(f"Pose {tuple(_as_list(pose))} inalcanzable (brazo {arm + 1})", details={
            "pose": _as_list(pose),
            "arm": arm
        })


class NoIntersectionError(DomainError):
    """Se lanza cuando las tres esferas de los antebrazos no se cortan."""

    def __init__(self, joints: Sequence[float]):
        super().__init__(f"Sin intersección de esferas para theta={tuple(_as_list(joints))}", details={
            "joints": _as_list(joints)
        })


class DegenerateConfigurationError(DomainError):
    """Se lanza cuando los centros de las esferas son colineales."""

    def __init__(self, joints: Sequence[float]):
        super().__init__(f"Centros colineales para theta={tuple(_as_list(joints))}", details={
            "joints": _as_list(joints)
        })


class SingularConfigurationError(DomainError):
    """Se lanza cuando la ecuación de un brazo degenera por completo (sin raíz lineal)."""

    def __init__(self, pose: Sequence[float], arm: int):
        super().__init__(f"Configuración singular en brazo {arm + 1}", details={
            "pose": _as_list(pose),
            "arm": arm
        })


class UnreachableWaypointError(DomainError):
    """
    Se lanza cuando un punto de paso de la trayectoria Pi queda fuera del espacio de trabajo.

    Ejemplo:
        raise UnreachableWaypointError(1, (0.0, 0.0, -2000.0))
    """

    def __init__(self, index: int, point: Sequence[float]):
        super().__init__(f"Punto de paso {index} inalcanzable: {tuple(_as_list(point))}", details={
            "index": index,
            "point": _as_list(point)
        })


class UnreachableSampleError(DomainError):
    """Se lanza cuando una muestra del spline sale del espacio de trabajo."""

    def __init__(self, t: float, point: Sequence[float]):
        super().__init__(f"Muestra en t={t:.6f} s inalcanzable: {tuple(_as_list(point))}", details={
            "t": t,
            "point": _as_list(point)
        })


class InfeasiblePickError(DomainError):
    """
    Se lanza cuando el robot no llega a tiempo a un objeto antes de que salga del alcance.

    Ejemplo:
        raise InfeasiblePickError("trk-0002", "robot ocupado hasta 12.400 s")
    """

    def __init__(self, item_id: str, reason: str):
        super().__init__(f"Pick infactible para {item_id}: {reason}", details={
            "item_id": item_id,
            "reason": reason
        })


class IllegalTransitionError(DomainError):
    """
    Se lanza cuando el controlador del robot intenta una transición no permitida.

    Ejemplo:
        raise IllegalTransitionError("Idle", "Grasping")
    """

    def __init__(self, source: str, target: str):
        super().__init__(f"Transición ilegal {source} -> {target}", details={
            "source": source,
            "target": target
        })
