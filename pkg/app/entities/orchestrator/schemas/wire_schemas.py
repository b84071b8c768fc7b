"""
Mensajes del protocolo visión ↔ robot

Cada mensaje viaja como un objeto JSON en una sola línea con un campo
"type" y claves snake_case. Los campos desconocidos se ignoran al decodificar.
"""

from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from app.entities.orchestrator.schemas.enums import EndpointStateEnum
from app.shared.validators import validate_non_empty_string


class _Message(BaseModel):
    model_config = ConfigDict(frozen=True, extra="ignore")


class PickRequest(_Message):
    """
    Orden de recogida emitida por el lado de visión.

    x0_mm / y0_mm están en el marco de la cinta en el instante t0_stamp_s.

    Ejemplo:
        PickRequest(item_id="trk-0001", x0_mm=120.0, y0_mm=400.0, w_mm=80.0, h_mm=60.0,
                    v_mm_s=350.0, t0_stamp_s=1.2, t_pick_s=6.571429)
    """
    type: Literal["pick_request"] = "pick_request"
    item_id: str
    x0_mm: float
    y0_mm: float
    w_mm: float
    h_mm: float
    v_mm_s: float
    t0_stamp_s: float
    t_pick_s: float

    @field_validator("item_id")
    @classmethod
    def validate_item_id(cls, v):
        return validate_non_empty_string(v, "item_id")


class Ack(_Message):
    type: Literal["ack"] = "ack"
    item_id: str


class Status(_Message):
    type: Literal["status"] = "status"
    robot_state: EndpointStateEnum
    busy_until_s: float


class Reject(_Message):
    type: Literal["reject"] = "reject"
    item_id: str
    reason: str

    @field_validator("reason")
    @classmethod
    def validate_reason(cls, v, info: ValidationInfo):
        return validate_non_empty_string(v, info.field_name)


WireMessage = Annotated[Union[PickRequest, Ack, Status, Reject], Field(discriminator="type")]
