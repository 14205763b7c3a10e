"""Envelope payload codecs.

Payloads are canonical JSON: UTF-8, lexicographically sorted keys, no
insignificant whitespace, unpadded integers, floats in their shortest
round-trip decimal form. Every payload carries "t" (virtual milliseconds),
"seq", and "type". decode(encode(x)) is the identity and encoding is
injective, which keeps traces and golden files byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Union

from ..model import (
    Command,
    CommandAction,
    DeviceStateChanged,
    Event,
    Gesture,
    MenuSelect,
    MoveTo,
    Position,
    SceneTransform,
    SetMode,
    SetPower,
    ShowIndicator,
    ShowMenu,
    ShowMessage,
    StudyThresholdReached,
    Tick,
    Toggle,
    UserAppeared,
    UserMoved,
    Wave,
    ZoneEntry,
    ZoneExit,
)
from .topics import BusError, Topic


class UnknownTypeError(BusError):
    code = "UNKNOWN_TYPE"

    def __init__(self, type_name: str):
        super().__init__(f"unknown payload type {type_name!r}")
        self.type_name = type_name


class MissingFieldError(BusError):
    code = "MISSING_FIELD"

    def __init__(self, field: str):
        super().__init__(f"payload is missing required field {field!r}")
        self.field = field


@dataclass(frozen=True)
class Envelope:
    """A topic plus its canonical JSON payload bytes."""

    topic: Topic
    payload: bytes

    def payload_dict(self) -> dict:
        return json.loads(self.payload.decode("utf-8"))


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def _require(payload: Mapping, field: str):
    if field not in payload:
        raise MissingFieldError(field)
    return payload[field]


# --- Events -------------------------------------------------------------------


def event_topic_parts(kind) -> tuple[str, str, Union[str, None]]:
    """(category, subject, leaf) for an event kind."""
    if isinstance(kind, (UserAppeared, Gesture, UserMoved)):
        subject = {"UserAppeared": "appeared", "Gesture": "gesture", "UserMoved": "moved"}[
            type(kind).__name__
        ]
        return ("user", subject, None)
    if isinstance(kind, ZoneEntry):
        return ("zone", kind.zone_id, "entry")
    if isinstance(kind, ZoneExit):
        return ("zone", kind.zone_id, "exit")
    if isinstance(kind, MenuSelect):
        return ("ui", "menu_select", None)
    if isinstance(kind, DeviceStateChanged):
        return ("device", kind.device_id, None)
    if isinstance(kind, Tick):
        return ("device", "clock", None)
    if isinstance(kind, StudyThresholdReached):
        return ("agent", kind.agent_id, None)
    raise ValueError(f"unencodable event kind {type(kind).__name__}")


def event_kind_fields(kind) -> dict:
    """Type-specific payload fields for an event kind, including "type"."""
    if isinstance(kind, UserAppeared):
        return {"type": "user_appeared"}
    if isinstance(kind, Gesture):
        return {"type": "gesture", "gesture": kind.name}
    if isinstance(kind, UserMoved):
        return {"type": "user_moved", "x": kind.position.x, "y": kind.position.y}
    if isinstance(kind, ZoneEntry):
        return {"type": "zone_entry", "zone": kind.zone_id}
    if isinstance(kind, ZoneExit):
        return {"type": "zone_exit", "zone": kind.zone_id}
    if isinstance(kind, MenuSelect):
        return {"type": "menu_select", "item": kind.item}
    if isinstance(kind, DeviceStateChanged):
        return {"type": "device_state", "device": kind.device_id, "state": dict(kind.state)}
    if isinstance(kind, Tick):
        return {"type": "tick"}
    if isinstance(kind, StudyThresholdReached):
        return {"type": "study_threshold_reached", "agent": kind.agent_id}
    raise ValueError(f"unencodable event kind {type(kind).__name__}")


def event_kind_from_fields(payload: Mapping):
    """Inverse of event_kind_fields; raises UnknownTypeError / MissingFieldError."""
    type_name = _require(payload, "type")
    if type_name == "user_appeared":
        return UserAppeared()
    if type_name == "gesture":
        return Gesture(name=_require(payload, "gesture"))
    if type_name == "user_moved":
        return UserMoved(Position(float(_require(payload, "x")), float(_require(payload, "y"))))
    if type_name == "zone_entry":
        return ZoneEntry(zone_id=_require(payload, "zone"))
    if type_name == "zone_exit":
        return ZoneExit(zone_id=_require(payload, "zone"))
    if type_name == "menu_select":
        return MenuSelect(item=_require(payload, "item"))
    if type_name == "device_state":
        return DeviceStateChanged(device_id=_require(payload, "device"), state=_require(payload, "state"))
    if type_name == "tick":
        return Tick()
    if type_name == "study_threshold_reached":
        return StudyThresholdReached(agent_id=_require(payload, "agent"))
    raise UnknownTypeError(type_name)


def encode_event(e: Event, space_id: str) -> Envelope:
    category, subject, leaf = event_topic_parts(e.kind)
    fields = event_kind_fields(e.kind)
    fields["t"] = e.t
    fields["seq"] = e.seq
    return Envelope(
        topic=Topic(space_id=space_id, channel="event", category=category, subject=subject, leaf=leaf),
        payload=canonical_json(fields),
    )


def decode_event(env: Envelope) -> Event:
    payload = env.payload_dict()
    t = _require(payload, "t")
    seq = _require(payload, "seq")
    kind = event_kind_from_fields(payload)
    return Event(t=int(t), seq=int(seq), kind=kind)


# --- Commands -----------------------------------------------------------------

_ACTION_TYPES = {
    SetPower: "set_power",
    ShowMessage: "show_message",
    ShowIndicator: "show_indicator",
    ShowMenu: "show_menu",
    MoveTo: "move_to",
    Wave: "wave",
    SceneTransform: "scene_transform",
    SetMode: "set_mode",
    Toggle: "toggle",
}


def action_fields(action: CommandAction) -> dict:
    """Type-specific fields for a command action, including "type"."""
    fields: dict
    if isinstance(action, SetPower):
        fields = {"on": action.on}
    elif isinstance(action, ShowMessage):
        fields = {"text": action.text}
    elif isinstance(action, ShowIndicator):
        fields = {"symbol": action.symbol}
        if action.zone_id is not None:
            fields["zone"] = action.zone_id
    elif isinstance(action, ShowMenu):
        fields = {"items": list(action.items)}
    elif isinstance(action, MoveTo):
        if isinstance(action.destination, Position):
            fields = {"x": action.destination.x, "y": action.destination.y}
        else:
            fields = {"destination": action.destination}
    elif isinstance(action, (Wave, Toggle)):
        fields = {}
    elif isinstance(action, SceneTransform):
        fields = {"theme": action.theme}
    elif isinstance(action, SetMode):
        fields = {"mode": action.mode}
    else:
        raise ValueError(f"unencodable action {type(action).__name__}")
    fields["type"] = _ACTION_TYPES[type(action)]
    return fields


def action_from_fields(payload: Mapping) -> CommandAction:
    type_name = _require(payload, "type")
    if type_name == "set_power":
        return SetPower(on=bool(_require(payload, "on")))
    if type_name == "show_message":
        return ShowMessage(text=_require(payload, "text"))
    if type_name == "show_indicator":
        return ShowIndicator(symbol=_require(payload, "symbol"), zone_id=payload.get("zone"))
    if type_name == "show_menu":
        return ShowMenu(items=tuple(_require(payload, "items")))
    if type_name == "move_to":
        if "destination" in payload:
            return MoveTo(destination=payload["destination"])
        return MoveTo(Position(float(_require(payload, "x")), float(_require(payload, "y"))))
    if type_name == "wave":
        return Wave()
    if type_name == "scene_transform":
        return SceneTransform(theme=_require(payload, "theme"))
    if type_name == "set_mode":
        return SetMode(mode=_require(payload, "mode"))
    if type_name == "toggle":
        return Toggle()
    raise UnknownTypeError(type_name)


def command_to_dict(c: Command) -> dict:
    return {"action": action_fields(c.action), "issuer": c.issuer, "target": c.target}


def command_from_dict(d: Mapping) -> Command:
    return Command(
        issuer=_require(d, "issuer"),
        target=_require(d, "target"),
        action=action_from_fields(_require(d, "action")),
    )


def encode_command(c: Command, t: int, seq: int, space_id: str, category: str = "device") -> Envelope:
    """category is "device" or "avatar" depending on the command target."""
    fields = action_fields(c.action)
    fields["issuer"] = c.issuer
    fields["t"] = t
    fields["seq"] = seq
    return Envelope(
        topic=Topic(space_id=space_id, channel="cmd", category=category, subject=c.target),
        payload=canonical_json(fields),
    )


def decode_command(env: Envelope) -> tuple[Command, int, int]:
    """Returns (command, t, seq); the target is the topic subject."""
    payload = env.payload_dict()
    t = int(_require(payload, "t"))
    seq = int(_require(payload, "seq"))
    issuer = _require(payload, "issuer")
    action = action_from_fields(payload)
    return Command(issuer=issuer, target=env.topic.subject, action=action), t, seq


# --- Retained state snapshots ---------------------------------------------------


def encode_state(
    category: str, subject: str, state: Mapping, t: int, seq: int, space_id: str, type_name: str
) -> Envelope:
    """Retained state snapshot for late-joining subscribers (agents, devices)."""
    payload = {"type": type_name, "state": dict(state), "t": t, "seq": seq}
    return Envelope(
        topic=Topic(space_id=space_id, channel="state", category=category, subject=subject),
        payload=canonical_json(payload),
    )


def encode_avatar_state(avatar_id: str, position, t: int, seq: int, space_id: str) -> Envelope:
    if isinstance(position, Position):
        state: dict = {"x": position.x, "y": position.y}
    else:
        state = {"position": position}
    payload = {"type": "avatar_state", "state": state, "t": t, "seq": seq}
    return Envelope(
        topic=Topic(space_id=space_id, channel="state", category="avatar", subject=avatar_id),
        payload=canonical_json(payload),
    )
