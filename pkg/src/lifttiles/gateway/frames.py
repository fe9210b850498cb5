"""Wire protocol: newline-delimited JSON frames, UTF-8, one frame per line.

Every request frame gets exactly one Ack or Err with the same correlation id.
StateSnapshot frames are server-pushed with strictly increasing sequence
numbers. Field order on the wire follows the model declarations, so frames
serialize byte-stably for golden files.
"""
from __future__ import annotations

import json
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

MAX_FRAME_BYTES = 1 << 20

ERROR_CODES = ("BadId", "OutOfRange", "Overlap", "Stale", "TooLarge", "Malformed")


class FrameError(ValueError):
    def __init__(self, message: str, correlation_id: str = ""):
        super().__init__(message)
        self.correlation_id = correlation_id


class _Payload(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SetTargetPayload(_Payload):
    targets: dict[str, float]


class LoadLayoutPayload(_Payload):
    layout: dict


class LoadPresetPayload(_Payload):
    name: str
    height_cm: float = 15.0


class OverrideValvePayload(_Payload):
    actuator_id: str
    supply: Literal["Open", "Closed"] = "Closed"
    release: Literal["Open", "Closed"] = "Closed"


class MoveActuatorPayload(_Payload):
    actuator_id: str
    x_cm: float
    y_cm: float
    orientation: Literal["FloorVertical", "WallHorizontal"] = "FloorVertical"
    grid_index: Optional[tuple[int, int]] = None


class SetLoadPayload(_Payload):
    actuator_id: str
    load_kg: float


class GetStatePayload(_Payload):
    pass


class PlanPayload(_Payload):
    targets: dict[str, float]
    from_heights: Optional[dict[str, float]] = None


class SubscribePayload(_Payload):
    on: bool = True


class ActuatorRecord(_Payload):
    id: str
    height_cm: float
    supply: str
    release: str
    fault: str
    load_kg: float
    target_cm: Optional[float] = None
    overridden: bool = False


class StateSnapshotPayload(_Payload):
    seq: int
    t_s: float
    actuators: list[ActuatorRecord]


class AckPayload(_Payload):
    result: dict = Field(default_factory=dict)


class ErrPayload(_Payload):
    code: Literal["BadId", "OutOfRange", "Overlap", "Stale", "TooLarge", "Malformed"]
    message: str


class _FrameBase(BaseModel):
    model_config = ConfigDict(extra="forbid")
    id: str = ""


class SetTargetFrame(_FrameBase):
    kind: Literal["SetTarget"]
    payload: SetTargetPayload


class LoadLayoutFrame(_FrameBase):
    kind: Literal["LoadLayout"]
    payload: LoadLayoutPayload


class LoadPresetFrame(_FrameBase):
    kind: Literal["LoadPreset"]
    payload: LoadPresetPayload


class OverrideValveFrame(_FrameBase):
    kind: Literal["OverrideValve"]
    payload: OverrideValvePayload


class MoveActuatorFrame(_FrameBase):
    kind: Literal["MoveActuator"]
    payload: MoveActuatorPayload


class SetLoadFrame(_FrameBase):
    kind: Literal["SetLoad"]
    payload: SetLoadPayload


class GetStateFrame(_FrameBase):
    kind: Literal["GetState"]
    payload: GetStatePayload = Field(default_factory=GetStatePayload)


class PlanFrame(_FrameBase):
    kind: Literal["Plan"]
    payload: PlanPayload


class SubscribeFrame(_FrameBase):
    kind: Literal["Subscribe"]
    payload: SubscribePayload = Field(default_factory=SubscribePayload)


class StateSnapshotFrame(_FrameBase):
    kind: Literal["StateSnapshot"]
    payload: StateSnapshotPayload


class AckFrame(_FrameBase):
    kind: Literal["Ack"] = "Ack"
    payload: AckPayload = Field(default_factory=AckPayload)


class ErrFrame(_FrameBase):
    kind: Literal["Err"] = "Err"
    payload: ErrPayload


Frame = Annotated[
    Union[SetTargetFrame, LoadLayoutFrame, LoadPresetFrame, OverrideValveFrame,
          MoveActuatorFrame, SetLoadFrame, GetStateFrame, PlanFrame,
          SubscribeFrame, StateSnapshotFrame, AckFrame, ErrFrame],
    Field(discriminator="kind"),
]

REQUEST_KINDS = ("SetTarget", "LoadLayout", "LoadPreset", "OverrideValve",
                 "MoveActuator", "SetLoad", "GetState", "Plan", "Subscribe")


class _FrameAdapter(BaseModel):
    root: Frame


def parse_frame(line: str) -> Frame:
    """Parse one wire line. Raises FrameError with diagnostics on bad input."""
    if len(line.encode("utf-8", errors="replace")) > MAX_FRAME_BYTES:
        raise FrameError("frame exceeds maximum size", _salvage_id(line))
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as e:
        raise FrameError(f"invalid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise FrameError("frame must be a JSON object")
    try:
        return _FrameAdapter(root=doc).root
    except ValidationError as e:
        cid = doc.get("id", "")
        raise FrameError(f"invalid frame: {e.errors()[0]['msg']}",
                         cid if isinstance(cid, str) else "") from e


def _salvage_id(line: str) -> str:
    try:
        doc = json.loads(line)
        cid = doc.get("id", "")
        return cid if isinstance(cid, str) else ""
    except Exception:
        return ""


def serialize_frame(frame) -> str:
    """One line, no embedded newlines, fields in declaration order."""
    return json.dumps(frame.model_dump(exclude_none=False), separators=(",", ":"),
                      ensure_ascii=False)


def err_frame(correlation_id: str, code: str, message: str) -> ErrFrame:
    return ErrFrame(id=correlation_id, payload=ErrPayload(code=code, message=message))


def ack_frame(correlation_id: str, result: Optional[dict] = None) -> AckFrame:
    return AckFrame(id=correlation_id, payload=AckPayload(result=result or {}))
