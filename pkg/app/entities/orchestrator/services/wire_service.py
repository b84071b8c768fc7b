"""
Codificación de mensajes del protocolo: un objeto JSON por línea
"""

from typing import Iterable, List, Union

from pydantic import TypeAdapter, ValidationError

from app.entities.orchestrator.schemas.wire_schemas import WireMessage
from app.shared.exceptions import MalformedMessageError


_ADAPTER = TypeAdapter(WireMessage)

DELIMITER = b"\n"


def encode_message(msg: WireMessage) -> bytes:
    """
    Serializa un mensaje como una línea JSON terminada en salto de línea.

    Ejemplo:
        encode_message(Ack(item_id="trk-0001"))
        # b'{"type":"ack","item_id":"trk-0001"}\\n'
    """
    return msg.model_dump_json().encode("utf-8") + DELIMITER


def decode_message(payload: Union[bytes, str]) -> WireMessage:
    """
    Raises:
        MalformedMessageError: JSON inválido, "type" desconocido o campos ausentes
    """
    raw = payload.encode("utf-8") if isinstance(payload, str) else bytes(payload)
    raw = raw.strip()
    if not raw:
        raise MalformedMessageError("mensaje vacío", payload=raw)
    try:
        return _ADAPTER.validate_json(raw)
    except ValidationError as e:
        errors = e.errors()
        first = errors[0] if errors else {}
        location = ".".join(str(part) for part in first.get("loc", ()))
        reason = f"{location}: {first.get('msg', 'inválido')}" if location else first.get("msg", str(e))
        raise MalformedMessageError(reason, payload=raw)


def encode_stream(messages: Iterable[WireMessage]) -> bytes:
    return b"".join(encode_message(m) for m in messages)


def decode_stream(data: bytes) -> List[WireMessage]:
    """Decodifica un flujo de líneas; ignora líneas en blanco."""
    return [decode_message(line) for line in data.split(DELIMITER) if line.strip()]
