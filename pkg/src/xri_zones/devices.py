"""Simulated physical devices.

Each device consumes Commands and answers with DeviceStateChanged events; an
event is emitted iff observable state actually changed, so idempotent commands
are silent. The webcam light detector is replaced by an additive lux model:
ambient base plus the contribution of every powered light. A real sensor could
substitute by publishing the same DeviceStateChanged message on the bus.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Union

from .model import (
    Command,
    DeviceDescriptor,
    DeviceKind,
    DeviceStateChanged,
    SceneTransform,
    SetMode,
    SetPower,
    ShowMessage,
    SpaceLayout,
)

DEFAULT_LIGHT_LUX = 300.0
DEFAULT_BASE_AMBIENT_LUX = 5.0


class UnsupportedActionError(Exception):
    """Command action does not apply to this device kind."""

    code = "UNSUPPORTED_ACTION"

    def __init__(self, device_id: str, action_name: str):
        super().__init__(f"device {device_id!r} does not support {action_name}")
        self.device_id = device_id
        self.action_name = action_name


@dataclass(frozen=True)
class LightState:
    device_id: str
    powered: bool = False
    lux_contribution: float = DEFAULT_LIGHT_LUX

    def snapshot(self) -> dict:
        return {"kind": "light", "powered": self.powered}


@dataclass(frozen=True)
class LuminanceSensorState:
    device_id: str
    base_ambient: float = DEFAULT_BASE_AMBIENT_LUX
    last_reading: float = DEFAULT_BASE_AMBIENT_LUX

    def snapshot(self) -> dict:
        return {"kind": "luminance_sensor", "lux": self.last_reading}


@dataclass(frozen=True)
class ProjectorState:
    device_id: str
    powered: bool = False
    mode: str = "off"  # "off" | "meeting"; mode == "meeting" implies powered

    def snapshot(self) -> dict:
        return {"kind": "projector", "mode": self.mode, "powered": self.powered}


@dataclass(frozen=True)
class SwitchState:
    device_id: str
    position: str = "on"  # "on" | "off"
    controlled_light_ids: tuple[str, ...] = ()

    def snapshot(self) -> dict:
        return {"kind": "switch", "position": self.position}


@dataclass(frozen=True)
class WallDisplayState:
    device_id: str
    scene: str = "neutral"
    message: str = ""

    def snapshot(self) -> dict:
        return {"kind": "wall_display", "message": self.message, "scene": self.scene}


DeviceState = Union[LightState, LuminanceSensorState, ProjectorState, SwitchState, WallDisplayState]


def initial_device_state(desc: DeviceDescriptor) -> DeviceState:
    """Build a device's start state from its layout descriptor."""
    p = desc.params
    if desc.kind == DeviceKind.LIGHT:
        return LightState(
            desc.device_id,
            powered=bool(p.get("powered", True)),
            lux_contribution=float(p.get("lux_contribution", DEFAULT_LIGHT_LUX)),
        )
    if desc.kind == DeviceKind.SWITCH:
        position = str(p.get("position", "on"))
        if position not in ("on", "off"):
            raise ValueError(f"switch {desc.device_id!r} position must be 'on' or 'off', got {position!r}")
        return SwitchState(
            desc.device_id,
            position=position,
            controlled_light_ids=tuple(p.get("controls", ())),
        )
    if desc.kind == DeviceKind.LUMINANCE_SENSOR:
        base = float(p.get("base_ambient", DEFAULT_BASE_AMBIENT_LUX))
        return LuminanceSensorState(desc.device_id, base_ambient=base, last_reading=base)
    if desc.kind == DeviceKind.PROJECTOR:
        return ProjectorState(desc.device_id)
    if desc.kind == DeviceKind.WALL_DISPLAY:
        return WallDisplayState(desc.device_id)
    raise ValueError(f"unknown device kind {desc.kind!r}")


def _changed(device_id: str, snapshot: dict) -> DeviceStateChanged:
    return DeviceStateChanged(device_id=device_id, state=snapshot)


def apply_command(state: DeviceState, c: Command, t: int) -> tuple[DeviceState, list[DeviceStateChanged]]:
    """Apply one command to one device.

    Returns the new state plus exactly one DeviceStateChanged per actual state
    change. Raises UnsupportedActionError when the action does not fit the
    device kind. t is accepted for adapter symmetry; simulated devices are
    time-invariant.
    """
    del t
    action = c.action
    if isinstance(state, LightState):
        if isinstance(action, SetPower):
            if state.powered == action.on:
                return state, []
            new = replace(state, powered=action.on)
            return new, [_changed(new.device_id, new.snapshot())]
    elif isinstance(state, ProjectorState):
        if isinstance(action, SetPower):
            if state.powered == action.on:
                # Power is already settled; mode stays as-is (off keeps mode off).
                return state, []
            new = replace(state, powered=action.on, mode=state.mode if action.on else "off")
            return new, [_changed(new.device_id, new.snapshot())]
        if isinstance(action, SetMode):
            if action.mode not in ("off", "meeting"):
                raise UnsupportedActionError(state.device_id, f"SetMode({action.mode!r})")
            # A projector cannot carry a live mode while unpowered.
            effective = action.mode if state.powered else "off"
            if state.mode == effective:
                return state, []
            new = replace(state, mode=effective)
            return new, [_changed(new.device_id, new.snapshot())]
    elif isinstance(state, SwitchState):
        if isinstance(action, SetPower):
            position = "on" if action.on else "off"
            if state.position == position:
                return state, []
            new = replace(state, position=position)
            return new, [_changed(new.device_id, new.snapshot())]
    elif isinstance(state, WallDisplayState):
        if isinstance(action, SceneTransform):
            if state.scene == action.theme:
                return state, []
            new = replace(state, scene=action.theme)
            return new, [_changed(new.device_id, new.snapshot())]
        if isinstance(action, ShowMessage):
            if state.message == action.text:
                return state, []
            new = replace(state, message=action.text)
            return new, [_changed(new.device_id, new.snapshot())]
    elif isinstance(state, LuminanceSensorState):
        # Sensors are read-only; they change via sample_luminance.
        pass
    return state, _reject(state, action)


def _reject(state: DeviceState, action) -> list[DeviceStateChanged]:
    raise UnsupportedActionError(state.device_id, type(action).__name__)


def sample_luminance(sensor: LuminanceSensorState, lights: list[LightState]) -> float:
    """Ambient base plus the contribution of every powered light."""
    return sensor.base_ambient + sum(l.lux_contribution for l in lights if l.powered)


def resample_sensor(
    sensor: LuminanceSensorState, lights: list[LightState]
) -> tuple[LuminanceSensorState, list[DeviceStateChanged]]:
    """Refresh last_reading; emits an event only when the reading moved."""
    reading = sample_luminance(sensor, lights)
    if reading == sensor.last_reading:
        return sensor, []
    new = replace(sensor, last_reading=reading)
    return new, [_changed(new.device_id, new.snapshot())]


def toggle_switch(
    s: SwitchState, lights: Mapping[str, LightState]
) -> tuple[SwitchState, dict[str, LightState], list[DeviceStateChanged]]:
    """Flip the switch and drive every controlled light to the new position.

    Events are emitted for each light whose power actually changed, in the
    switch's listed order, then one event for the switch itself.
    """
    new_position = "off" if s.position == "on" else "on"
    want_power = new_position == "on"
    events: list[DeviceStateChanged] = []
    new_lights: dict[str, LightState] = {}
    for light_id in s.controlled_light_ids:
        light = lights[light_id]
        if light.powered != want_power:
            light = replace(light, powered=want_power)
            events.append(_changed(light.device_id, light.snapshot()))
        new_lights[light_id] = light
    new_switch = replace(s, position=new_position)
    events.append(_changed(new_switch.device_id, new_switch.snapshot()))
    return new_switch, new_lights, events


def build_device_states(layout: SpaceLayout) -> dict[str, DeviceState]:
    """Start states for every device in the layout, keyed by device id."""
    return {d.device_id: initial_device_state(d) for d in layout.devices}
