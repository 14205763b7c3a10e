"""Scenario scripts: line-oriented user-action scripts with virtual timestamps.

Format (one directive per line, `#` comments and blank lines ignored):

    space lab
    config study_threshold_ms 60000
    at 0 appear
    at 1000 gesture thumbs_up
    at 2000 select start_learning
    at 3000 enter learning
    at 4000 move 2.5 1.0
    at 5000 toggle switch1

Step times are absolute virtual milliseconds and must be non-decreasing.
Ticks are not scripted; the engine injects them every tick_ms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .model import MENU_ITEMS, Position, SpaceLayout

CONFIG_KEYS = ("study_threshold_ms", "luminance_threshold_lux", "tick_ms")


@dataclass(frozen=True)
class Appear:
    pass


@dataclass(frozen=True)
class DoGesture:
    name: str


@dataclass(frozen=True)
class MoveUser:
    position: Position


@dataclass(frozen=True)
class EnterZone:
    zone_id: str


@dataclass(frozen=True)
class SelectMenu:
    item: str


@dataclass(frozen=True)
class ToggleDevice:
    device_id: str


UserAction = Union[Appear, DoGesture, MoveUser, EnterZone, SelectMenu, ToggleDevice]


@dataclass(frozen=True)
class ScriptStep:
    line: int
    t: int
    action: UserAction


@dataclass(frozen=True)
class ScenarioScript:
    space_id: Optional[str] = None
    layout_ref: Optional[str] = None
    config: dict = field(default_factory=dict)
    steps: tuple[ScriptStep, ...] = ()


@dataclass(frozen=True)
class ScriptViolation:
    code: str
    line: int
    message: str


class ScriptError(Exception):
    def __init__(self, violations: list[ScriptViolation]):
        super().__init__("; ".join(f"{v.code} at line {v.line}: {v.message}" for v in violations))
        self.violations = violations


def _parse_action(parts: list[str], line_no: int, violations: list[ScriptViolation]) -> Optional[UserAction]:
    verb, args = parts[0], parts[1:]
    if verb == "appear" and not args:
        return Appear()
    if verb == "gesture" and len(args) == 1:
        return DoGesture(args[0])
    if verb == "move" and len(args) == 2:
        try:
            return MoveUser(Position(float(args[0]), float(args[1])))
        except ValueError:
            pass
    if verb == "enter" and len(args) == 1:
        return EnterZone(args[0])
    if verb == "select" and len(args) == 1:
        if args[0] in MENU_ITEMS:
            return SelectMenu(args[0])
        violations.append(
            ScriptViolation("PARSE_ERROR", line_no, f"unknown menu item {args[0]!r}; expected one of {MENU_ITEMS}")
        )
        return None
    if verb == "toggle" and len(args) == 1:
        return ToggleDevice(args[0])
    violations.append(ScriptViolation("PARSE_ERROR", line_no, f"cannot parse step {' '.join(parts)!r}"))
    return None


def load_script(data: bytes, layout: SpaceLayout) -> ScenarioScript:
    """Parse and validate a script against a layout.

    Raises ScriptError carrying every violation, each with its line number:
    PARSE_ERROR, NON_MONOTONE_TIME, UNKNOWN_ZONE, UNKNOWN_DEVICE,
    SPACE_MISMATCH.
    """
    violations: list[ScriptViolation] = []
    space_id: Optional[str] = None
    layout_ref: Optional[str] = None
    config: dict = {}
    steps: list[ScriptStep] = []
    last_t: Optional[int] = None
    zone_ids = {z.zone_id for z in layout.zones}
    device_ids = {d.device_id for d in layout.devices}

    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ScriptError([ScriptViolation("PARSE_ERROR", 0, f"script is not UTF-8: {exc}")]) from exc

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "space" and len(parts) == 2:
            space_id = parts[1]
            if space_id != layout.space_id:
                violations.append(
                    ScriptViolation(
                        "SPACE_MISMATCH",
                        line_no,
                        f"script is for space {space_id!r} but layout is {layout.space_id!r}",
                    )
                )
            continue
        if parts[0] == "layout" and len(parts) == 2:
            layout_ref = parts[1]
            continue
        if parts[0] == "config" and len(parts) == 3:
            if parts[1] not in CONFIG_KEYS:
                violations.append(
                    ScriptViolation("PARSE_ERROR", line_no, f"unknown config key {parts[1]!r}; expected one of {CONFIG_KEYS}")
                )
                continue
            try:
                value = float(parts[2]) if parts[1] == "luminance_threshold_lux" else int(parts[2])
            except ValueError:
                violations.append(ScriptViolation("PARSE_ERROR", line_no, f"bad config value {parts[2]!r}"))
                continue
            config[parts[1]] = value
            continue
        if parts[0] == "at" and len(parts) >= 3:
            try:
                t = int(parts[1])
                if t < 0:
                    raise ValueError
            except ValueError:
                violations.append(ScriptViolation("PARSE_ERROR", line_no, f"bad step time {parts[1]!r}"))
                continue
            if last_t is not None and t < last_t:
                violations.append(
                    ScriptViolation("NON_MONOTONE_TIME", line_no, f"step time {t} is before previous step time {last_t}")
                )
                continue
            action = _parse_action(parts[2:], line_no, violations)
            if action is None:
                continue
            if isinstance(action, EnterZone) and action.zone_id not in zone_ids:
                violations.append(
                    ScriptViolation("UNKNOWN_ZONE", line_no, f"zone {action.zone_id!r} is not in the layout")
                )
                continue
            if isinstance(action, ToggleDevice) and action.device_id not in device_ids:
                violations.append(
                    ScriptViolation("UNKNOWN_DEVICE", line_no, f"device {action.device_id!r} is not in the layout")
                )
                continue
            last_t = t
            steps.append(ScriptStep(line=line_no, t=t, action=action))
            continue
        violations.append(ScriptViolation("PARSE_ERROR", line_no, f"cannot parse line {raw.strip()!r}"))

    if violations:
        raise ScriptError(violations)
    return ScenarioScript(space_id=space_id, layout_ref=layout_ref, config=config, steps=tuple(steps))
