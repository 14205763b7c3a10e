"""The bundled lab floorplan.

Illustrative, not canonical: three task zones plus a neutral corridor, two
ceiling lights on one switch in the meeting zone, a luminance sensor, a
projector, and a wall display in each of the learning and relax zones.
Defaults are chosen so one switch toggle crosses the meeting agent's
luminance threshold decisively (5 + 2*300 = 605 lux on, 5 lux off, gate 50).
"""

from __future__ import annotations

from .model import (
    AgentDescriptor,
    AgentKind,
    DeviceDescriptor,
    DeviceKind,
    Position,
    ROAMING,
    SpaceLayout,
    Zone,
    ZoneKind,
)


def default_lab_layout() -> SpaceLayout:
    return SpaceLayout(
        space_id="lab",
        zones=(
            Zone(
                zone_id="learning",
                min_corner=Position(0.0, 0.0),
                max_corner=Position(4.0, 4.0),
                kind=ZoneKind.LEARNING,
                bound_agent="workstation",
                bound_devices=("display_learning",),
            ),
            Zone(
                zone_id="corridor",
                min_corner=Position(4.0, 0.0),
                max_corner=Position(6.0, 4.0),
                kind=ZoneKind.NEUTRAL,
            ),
            Zone(
                zone_id="relax",
                min_corner=Position(6.0, 0.0),
                max_corner=Position(10.0, 4.0),
                kind=ZoneKind.RELAX,
                bound_agent="relax",
                bound_devices=("wall_relax",),
            ),
            Zone(
                zone_id="meeting",
                min_corner=Position(0.0, 5.0),
                max_corner=Position(10.0, 8.0),
                kind=ZoneKind.MEETING,
                bound_agent="meeting",
                bound_devices=("light1", "light2", "switch1", "lux1", "projector1"),
            ),
        ),
        devices=(
            DeviceDescriptor("display_learning", DeviceKind.WALL_DISPLAY, "learning"),
            DeviceDescriptor("wall_relax", DeviceKind.WALL_DISPLAY, "relax"),
            DeviceDescriptor(
                "light1", DeviceKind.LIGHT, "meeting", {"lux_contribution": 300.0, "powered": True}
            ),
            DeviceDescriptor(
                "light2", DeviceKind.LIGHT, "meeting", {"lux_contribution": 300.0, "powered": True}
            ),
            DeviceDescriptor(
                "switch1", DeviceKind.SWITCH, "meeting", {"position": "on", "controls": ["light1", "light2"]}
            ),
            DeviceDescriptor("lux1", DeviceKind.LUMINANCE_SENSOR, "meeting", {"base_ambient": 5.0}),
            DeviceDescriptor("projector1", DeviceKind.PROJECTOR, "meeting"),
        ),
        agents=(
            AgentDescriptor("guide", AgentKind.GUIDE, ROAMING),
            AgentDescriptor("workstation", AgentKind.WORKSTATION, "learning"),
            AgentDescriptor("relax", AgentKind.RELAX, "relax"),
            AgentDescriptor("meeting", AgentKind.MEETING, "meeting"),
        ),
        config={},
    )
