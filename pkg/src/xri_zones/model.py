"""Shared domain model: space geometry, events, commands, layout validation.

Everything here is an immutable value. Operations are pure functions, so the
runtime can copy or share them freely between threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Union

LAYOUT_VERSION = 1

#: The fixed task set the guide menu is drawn from.
MENU_ITEMS = ("start_learning", "start_relaxing", "start_meeting")

#: Agent descriptor zone value meaning "not bound to any zone".
ROAMING = "roaming"


class ZoneKind(str, Enum):
    LEARNING = "learning"
    RELAX = "relax"
    MEETING = "meeting"
    NEUTRAL = "neutral"


class DeviceKind(str, Enum):
    LIGHT = "light"
    SWITCH = "switch"
    LUMINANCE_SENSOR = "luminance_sensor"
    PROJECTOR = "projector"
    WALL_DISPLAY = "wall_display"


class AgentKind(str, Enum):
    GUIDE = "guide"
    WORKSTATION = "workstation"
    RELAX = "relax"
    MEETING = "meeting"


@dataclass(frozen=True)
class Position:
    """A point on the floorplan, in meters."""

    x: float
    y: float

    def __post_init__(self) -> None:
        # Normalize to float so equal positions always serialize identically.
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"position coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class Zone:
    """Axis-aligned rectangular zone. Bounds are validated by validate_layout."""

    zone_id: str
    min_corner: Position
    max_corner: Position
    kind: ZoneKind
    bound_agent: Optional[str] = None
    bound_devices: tuple[str, ...] = ()

    def area(self) -> float:
        return (self.max_corner.x - self.min_corner.x) * (self.max_corner.y - self.min_corner.y)

    def contains(self, p: Position) -> bool:
        """Boundary-inclusive membership test."""
        return (
            self.min_corner.x <= p.x <= self.max_corner.x
            and self.min_corner.y <= p.y <= self.max_corner.y
        )

    def center(self) -> Position:
        return Position(
            (self.min_corner.x + self.max_corner.x) / 2.0,
            (self.min_corner.y + self.max_corner.y) / 2.0,
        )


@dataclass(frozen=True)
class DeviceDescriptor:
    device_id: str
    kind: DeviceKind
    zone_id: str
    params: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class AgentDescriptor:
    agent_id: str
    kind: AgentKind
    zone_id: str  # a zone id, or ROAMING for the guide


@dataclass(frozen=True)
class SpaceLayout:
    """The digital floorplan: zones plus device and agent bindings."""

    space_id: str
    zones: tuple[Zone, ...]
    devices: tuple[DeviceDescriptor, ...] = ()
    agents: tuple[AgentDescriptor, ...] = ()
    config: Mapping[str, Union[int, float]] = field(default_factory=dict)

    def zone(self, zone_id: str) -> Zone:
        for z in self.zones:
            if z.zone_id == zone_id:
                return z
        raise KeyError(zone_id)

    def device(self, device_id: str) -> DeviceDescriptor:
        for d in self.devices:
            if d.device_id == device_id:
                return d
        raise KeyError(device_id)

    def devices_of_kind(self, kind: DeviceKind) -> tuple[DeviceDescriptor, ...]:
        return tuple(d for d in self.devices if d.kind == kind)

    def zones_of_kind(self, kind: ZoneKind) -> tuple[Zone, ...]:
        return tuple(z for z in self.zones if z.kind == kind)


# --- Events ------------------------------------------------------------------


@dataclass(frozen=True)
class UserAppeared:
    pass


@dataclass(frozen=True)
class Gesture:
    name: str


@dataclass(frozen=True)
class UserMoved:
    position: Position


@dataclass(frozen=True)
class ZoneEntry:
    zone_id: str


@dataclass(frozen=True)
class ZoneExit:
    zone_id: str


@dataclass(frozen=True)
class MenuSelect:
    item: str


@dataclass(frozen=True)
class DeviceStateChanged:
    device_id: str
    state: Mapping[str, object]


@dataclass(frozen=True)
class Tick:
    pass


@dataclass(frozen=True)
class StudyThresholdReached:
    """Raised by the workstation agent when the study timer crosses its threshold."""

    agent_id: str = "workstation"


EventKind = Union[
    UserAppeared,
    Gesture,
    UserMoved,
    ZoneEntry,
    ZoneExit,
    MenuSelect,
    DeviceStateChanged,
    Tick,
    StudyThresholdReached,
]


@dataclass(frozen=True)
class Event:
    """A timestamped occurrence in the run's totally ordered stream.

    t is virtual time in integer milliseconds; seq is assigned by the runtime
    ingress and is strictly increasing within a run.
    """

    t: int
    seq: int
    kind: EventKind

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"event time must be >= 0, got {self.t}")


# --- Commands ----------------------------------------------------------------


@dataclass(frozen=True)
class SetPower:
    on: bool


@dataclass(frozen=True)
class ShowMessage:
    text: str


@dataclass(frozen=True)
class ShowIndicator:
    symbol: str
    zone_id: Optional[str] = None


@dataclass(frozen=True)
class ShowMenu:
    items: tuple[str, ...]


@dataclass(frozen=True)
class MoveTo:
    """Destination is a Position, a zone id, a device id, or "with_user"."""

    destination: Union[Position, str]


@dataclass(frozen=True)
class Wave:
    pass


@dataclass(frozen=True)
class SceneTransform:
    theme: str


@dataclass(frozen=True)
class SetMode:
    mode: str


@dataclass(frozen=True)
class Toggle:
    """User-side flip of a physical control (published by UIs, never by agents)."""


CommandAction = Union[
    SetPower, ShowMessage, ShowIndicator, ShowMenu, MoveTo, Wave, SceneTransform, SetMode, Toggle
]


@dataclass(frozen=True)
class Command:
    """An agent-emitted instruction to a device or to an avatar."""

    issuer: str
    target: str
    action: CommandAction


# --- Layout validation -------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    detail: str


def validate_layout(layout: SpaceLayout) -> list[Violation]:
    """Check every layout invariant; returns all violations (empty = valid).

    Violations are data, not failures: a broken layout never raises here.
    """
    out: list[Violation] = []
    zone_ids = set()
    for z in layout.zones:
        if not z.zone_id:
            out.append(Violation("EMPTY_ZONE_ID", z.zone_id, "zone with empty id"))
        if z.zone_id in zone_ids:
            out.append(Violation("DUPLICATE_ZONE_ID", z.zone_id, f"zone id {z.zone_id!r} appears more than once"))
        zone_ids.add(z.zone_id)
        if not (z.min_corner.x < z.max_corner.x and z.min_corner.y < z.max_corner.y):
            out.append(
                Violation(
                    "INVALID_BOUNDS",
                    z.zone_id,
                    f"zone {z.zone_id!r} min corner must be strictly below max corner on both axes",
                )
            )

    device_ids = set()
    for d in layout.devices:
        if d.device_id in device_ids:
            out.append(Violation("DUPLICATE_DEVICE_ID", d.device_id, f"device id {d.device_id!r} appears more than once"))
        device_ids.add(d.device_id)
        if d.zone_id not in zone_ids:
            out.append(
                Violation("UNRESOLVED_ZONE", d.device_id, f"device {d.device_id!r} placed in unknown zone {d.zone_id!r}")
            )

    agent_ids = set()
    roaming_guides = 0
    for a in layout.agents:
        if a.agent_id in agent_ids:
            out.append(Violation("DUPLICATE_AGENT_ID", a.agent_id, f"agent id {a.agent_id!r} appears more than once"))
        agent_ids.add(a.agent_id)
        if a.zone_id == ROAMING:
            if a.kind == AgentKind.GUIDE:
                roaming_guides += 1
        elif a.zone_id not in zone_ids:
            out.append(
                Violation("UNRESOLVED_ZONE", a.agent_id, f"agent {a.agent_id!r} bound to unknown zone {a.zone_id!r}")
            )
    if roaming_guides != 1:
        out.append(
            Violation(
                "ROAMING_GUIDE_COUNT",
                layout.space_id,
                f"layout must declare exactly one roaming guide agent, found {roaming_guides}",
            )
        )

    for z in layout.zones:
        if z.bound_agent is not None and z.bound_agent not in agent_ids:
            out.append(
                Violation("UNRESOLVED_AGENT", z.zone_id, f"zone {z.zone_id!r} binds unknown agent {z.bound_agent!r}")
            )
        for dev in z.bound_devices:
            if dev not in device_ids:
                out.append(
                    Violation("UNRESOLVED_DEVICE", z.zone_id, f"zone {z.zone_id!r} binds unknown device {dev!r}")
                )
    return out


def zone_membership(p: Position, layout: SpaceLayout) -> Optional[str]:
    """Return the zone containing p, or None.

    Boundary points count as inside. When zones overlap, the smallest area
    wins; area ties break to the lexicographically smallest zone_id.
    """
    best: Optional[Zone] = None
    for z in layout.zones:
        if not z.contains(p):
            continue
        if best is None:
            best = z
            continue
        za, ba = z.area(), best.area()
        if za < ba or (za == ba and z.zone_id < best.zone_id):
            best = z
    return best.zone_id if best is not None else None


def derive_zone_events(prev: Optional[str], nxt: Optional[str]) -> list[EventKind]:
    """Turn a zone-membership transition into exit/entry events, exit first."""
    if prev == nxt:
        return []
    out: list[EventKind] = []
    if prev is not None:
        out.append(ZoneExit(prev))
    if nxt is not None:
        out.append(ZoneEntry(nxt))
    return out


# --- Layout JSON -------------------------------------------------------------


class LayoutFormatError(ValueError):
    """The layout document does not match the published schema."""


def layout_to_json(layout: SpaceLayout) -> str:
    """Serialize to the published layout document (sorted keys, version 1)."""
    doc = {
        "layout_version": LAYOUT_VERSION,
        "space_id": layout.space_id,
        "zones": [
            {
                "zone_id": z.zone_id,
                "min": [z.min_corner.x, z.min_corner.y],
                "max": [z.max_corner.x, z.max_corner.y],
                "kind": z.kind.value,
                "bound_agent": z.bound_agent,
                "bound_devices": list(z.bound_devices),
            }
            for z in layout.zones
        ],
        "devices": [
            {
                "device_id": d.device_id,
                "kind": d.kind.value,
                "zone_id": d.zone_id,
                "params": dict(d.params),
            }
            for d in layout.devices
        ],
        "agents": [
            {"agent_id": a.agent_id, "kind": a.kind.value, "zone_id": a.zone_id}
            for a in layout.agents
        ],
        "config": dict(layout.config),
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def layout_from_json(text: str) -> SpaceLayout:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LayoutFormatError(f"layout is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise LayoutFormatError("layout document must be a JSON object")
    if doc.get("layout_version") != LAYOUT_VERSION:
        raise LayoutFormatError(f"unsupported layout_version {doc.get('layout_version')!r}")
    try:
        zones = tuple(
            Zone(
                zone_id=z["zone_id"],
                min_corner=Position(float(z["min"][0]), float(z["min"][1])),
                max_corner=Position(float(z["max"][0]), float(z["max"][1])),
                kind=ZoneKind(z["kind"]),
                bound_agent=z.get("bound_agent"),
                bound_devices=tuple(z.get("bound_devices", ())),
            )
            for z in doc.get("zones", ())
        )
        devices = tuple(
            DeviceDescriptor(
                device_id=d["device_id"],
                kind=DeviceKind(d["kind"]),
                zone_id=d["zone_id"],
                params=dict(d.get("params", {})),
            )
            for d in doc.get("devices", ())
        )
        agents = tuple(
            AgentDescriptor(agent_id=a["agent_id"], kind=AgentKind(a["kind"]), zone_id=a["zone_id"])
            for a in doc.get("agents", ())
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise LayoutFormatError(f"malformed layout document: {exc!r}") from exc
    return SpaceLayout(
        space_id=doc.get("space_id", ""),
        zones=zones,
        devices=devices,
        agents=agents,
        config=dict(doc.get("config", {})),
    )
