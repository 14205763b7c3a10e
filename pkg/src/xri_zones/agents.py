"""Deterministic finite-state-machine agents.

Each agent consumes one Event and answers with a new state, zero or more
Commands, and zero or more agent-raised events. Step functions are pure: the
result depends only on (state, event, config), never on wall time or hidden
state. The runtime applies events to agents in the fixed order guide,
workstation, relax, meeting with run-to-completion semantics.

Left open on purpose (documented behavior): the relax prompt does not repeat
if the user ignores it, and studying does not auto-resume after relaxing
without selecting the menu again.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

from .model import (
    AgentKind,
    Command,
    DeviceKind,
    DeviceStateChanged,
    Event,
    EventKind,
    Gesture,
    MENU_ITEMS,
    MenuSelect,
    MoveTo,
    SceneTransform,
    SetMode,
    SetPower,
    ShowIndicator,
    ShowMenu,
    ShowMessage,
    SpaceLayout,
    StudyThresholdReached,
    Tick,
    UserAppeared,
    Wave,
    ZoneEntry,
    ZoneExit,
    ZoneKind,
)

THUMBS_UP = "thumbs_up"
WITH_USER = "with_user"

WELCOME_TEXT = "welcome to the lab"
TURN_OFF_LIGHT_TEXT = "please turn off the light"
PARTICLE_THEME = "particles"
NEUTRAL_THEME = "neutral"

DEFAULT_STUDY_THRESHOLD_MS = 1_500_000  # 25 minutes
DEFAULT_LUMINANCE_THRESHOLD_LUX = 50.0
DEFAULT_TICK_MS = 1_000


@dataclass(frozen=True)
class AgentConfig:
    """Thresholds plus the zone/device/avatar wiring resolved from a layout."""

    study_threshold_ms: int = DEFAULT_STUDY_THRESHOLD_MS
    luminance_threshold_lux: float = DEFAULT_LUMINANCE_THRESHOLD_LUX
    tick_ms: int = DEFAULT_TICK_MS
    learning_zone_id: str = "learning"
    relax_zone_id: str = "relax"
    guide_agent_id: str = "guide"
    workstation_agent_id: str = "workstation"
    relax_agent_id: str = "relax"
    meeting_agent_id: str = "meeting"
    avatar_id: str = "guide"
    switch_id: str = "switch1"
    projector_id: str = "projector1"
    luminance_sensor_id: str = "lux1"
    relax_display_id: str = "wall_relax"
    study_display_id: str = "display_learning"

    @staticmethod
    def from_layout(layout: SpaceLayout, overrides: Optional[dict] = None) -> "AgentConfig":
        """Resolve wiring by zone/device/agent kinds; config keys override thresholds."""
        cfg = dict(layout.config)
        cfg.update(overrides or {})

        def first_zone(kind: ZoneKind, default: str) -> str:
            zones = layout.zones_of_kind(kind)
            return zones[0].zone_id if zones else default

        def first_device(kind: DeviceKind, default: str) -> str:
            devs = layout.devices_of_kind(kind)
            return devs[0].device_id if devs else default

        def display_in(zone_id: str, default: str) -> str:
            for d in layout.devices_of_kind(DeviceKind.WALL_DISPLAY):
                if d.zone_id == zone_id:
                    return d.device_id
            return default

        def agent_of(kind: AgentKind, default: str) -> str:
            for a in layout.agents:
                if a.kind == kind:
                    return a.agent_id
            return default

        learning = first_zone(ZoneKind.LEARNING, "learning")
        relax = first_zone(ZoneKind.RELAX, "relax")
        guide = agent_of(AgentKind.GUIDE, "guide")
        return AgentConfig(
            study_threshold_ms=int(cfg.get("study_threshold_ms", DEFAULT_STUDY_THRESHOLD_MS)),
            luminance_threshold_lux=float(
                cfg.get("luminance_threshold_lux", DEFAULT_LUMINANCE_THRESHOLD_LUX)
            ),
            tick_ms=int(cfg.get("tick_ms", DEFAULT_TICK_MS)),
            learning_zone_id=learning,
            relax_zone_id=relax,
            guide_agent_id=guide,
            workstation_agent_id=agent_of(AgentKind.WORKSTATION, "workstation"),
            relax_agent_id=agent_of(AgentKind.RELAX, "relax"),
            meeting_agent_id=agent_of(AgentKind.MEETING, "meeting"),
            avatar_id=guide,
            switch_id=first_device(DeviceKind.SWITCH, "switch1"),
            projector_id=first_device(DeviceKind.PROJECTOR, "projector1"),
            luminance_sensor_id=first_device(DeviceKind.LUMINANCE_SENSOR, "lux1"),
            relax_display_id=display_in(relax, "wall_relax"),
            study_display_id=display_in(learning, "display_learning"),
        )


@dataclass(frozen=True)
class AgentStepResult:
    new_state: object
    commands: tuple[Command, ...] = ()
    emitted_events: tuple[EventKind, ...] = ()


def _noop(state) -> AgentStepResult:
    return AgentStepResult(new_state=state)


# --- Guide (roaming plant-avatar assistant) -----------------------------------


class GuidePhase(str, Enum):
    IDLE = "idle"
    WELCOMING = "welcoming"
    MENU_OPEN = "menu_open"
    GUIDING_TO_LEARNING = "guiding_to_learning"
    OBSERVING_LEARNING = "observing_learning"
    PROMPTING_RELAX = "prompting_relax"
    GUIDING_TO_RELAX = "guiding_to_relax"
    GUIDING_TO_MEETING = "guiding_to_meeting"
    AT_LIGHT_SWITCH = "at_light_switch"


@dataclass(frozen=True)
class GuideState:
    phase: GuidePhase = GuidePhase.IDLE
    avatar_position: str = WITH_USER  # zone id, device id, or "with_user"
    ignored_menu_selects: int = 0  # diagnostic: MenuSelect arrived with no menu showing


def guide_step(s: GuideState, e: Event, config: AgentConfig) -> AgentStepResult:
    """Guide transition table; unlisted (phase, event) pairs are no-ops.

    The thumbs-up gesture opens the menu from any phase, canceling whatever
    guidance was in progress. A MenuSelect outside MenuOpen/PromptingRelax is
    ignored and counted (it signals a desynchronized UI).
    """
    kind = e.kind
    avatar = config.avatar_id

    def cmd(action) -> Command:
        return Command(issuer=config.guide_agent_id, target=avatar, action=action)

    if isinstance(kind, Gesture) and kind.name == THUMBS_UP:
        return AgentStepResult(
            new_state=replace(s, phase=GuidePhase.MENU_OPEN, avatar_position=WITH_USER),
            commands=(
                cmd(Wave()),
                cmd(MoveTo(WITH_USER)),
                cmd(ShowMenu(MENU_ITEMS)),
            ),
        )

    if s.phase == GuidePhase.IDLE and isinstance(kind, UserAppeared):
        return AgentStepResult(
            new_state=replace(s, phase=GuidePhase.WELCOMING),
            commands=(
                cmd(ShowMessage(WELCOME_TEXT)),
                cmd(ShowIndicator(THUMBS_UP)),
            ),
        )

    if isinstance(kind, MenuSelect):
        if s.phase == GuidePhase.MENU_OPEN:
            if kind.item == "start_learning":
                return AgentStepResult(
                    new_state=replace(
                        s,
                        phase=GuidePhase.GUIDING_TO_LEARNING,
                        avatar_position=config.learning_zone_id,
                    ),
                    commands=(
                        cmd(MoveTo(config.learning_zone_id)),
                        cmd(ShowIndicator("here", config.learning_zone_id)),
                    ),
                )
            if kind.item == "start_relaxing":
                return AgentStepResult(
                    new_state=replace(
                        s, phase=GuidePhase.GUIDING_TO_RELAX, avatar_position=config.relax_zone_id
                    ),
                    commands=(cmd(MoveTo(config.relax_zone_id)),),
                )
            if kind.item == "start_meeting":
                return AgentStepResult(
                    new_state=replace(
                        s, phase=GuidePhase.GUIDING_TO_MEETING, avatar_position=config.switch_id
                    ),
                    commands=(
                        cmd(MoveTo(config.switch_id)),
                        cmd(ShowMessage(TURN_OFF_LIGHT_TEXT)),
                    ),
                )
            return _noop(s)
        if s.phase == GuidePhase.PROMPTING_RELAX:
            if kind.item == "start_relaxing":
                return AgentStepResult(
                    new_state=replace(
                        s, phase=GuidePhase.GUIDING_TO_RELAX, avatar_position=config.relax_zone_id
                    ),
                    commands=(cmd(MoveTo(config.relax_zone_id)),),
                )
            return _noop(s)
        return AgentStepResult(new_state=replace(s, ignored_menu_selects=s.ignored_menu_selects + 1))

    if s.phase == GuidePhase.GUIDING_TO_LEARNING and isinstance(kind, ZoneEntry):
        if kind.zone_id == config.learning_zone_id:
            return AgentStepResult(new_state=replace(s, phase=GuidePhase.OBSERVING_LEARNING))

    if s.phase == GuidePhase.OBSERVING_LEARNING and isinstance(kind, StudyThresholdReached):
        return AgentStepResult(
            new_state=replace(s, phase=GuidePhase.PROMPTING_RELAX, avatar_position=WITH_USER),
            commands=(
                cmd(MoveTo(WITH_USER)),
                cmd(ShowMenu(("start_relaxing",))),
            ),
        )

    if s.phase == GuidePhase.GUIDING_TO_MEETING and isinstance(kind, DeviceStateChanged):
        if kind.device_id == config.switch_id and kind.state.get("position") == "off":
            return AgentStepResult(new_state=replace(s, phase=GuidePhase.AT_LIGHT_SWITCH))

    return _noop(s)


# --- Workstation (study-timer agent in the learning zone) ---------------------


@dataclass(frozen=True)
class WorkstationState:
    studying: bool = False
    study_started_at: Optional[int] = None  # present iff studying
    threshold_ms: int = DEFAULT_STUDY_THRESHOLD_MS
    threshold_fired: bool = False


def format_study_time(elapsed_ms: int) -> str:
    total_s = elapsed_ms // 1000
    return f"study_time {total_s // 60:02d}:{total_s % 60:02d}"


def workstation_step(s: WorkstationState, e: Event, now: int, config: AgentConfig) -> AgentStepResult:
    """Track time-in-zone for the learning zone.

    Zone entry starts the timer, exit stops it. Each tick while studying shows
    the elapsed time; the first tick at or past the threshold raises
    StudyThresholdReached exactly once per study session.
    """
    kind = e.kind
    if isinstance(kind, ZoneEntry) and kind.zone_id == config.learning_zone_id:
        return AgentStepResult(
            new_state=replace(s, studying=True, study_started_at=now, threshold_fired=False)
        )
    if isinstance(kind, ZoneExit) and kind.zone_id == config.learning_zone_id:
        if not s.studying:
            return _noop(s)
        return AgentStepResult(new_state=replace(s, studying=False, study_started_at=None))
    if isinstance(kind, Tick) and s.studying and s.study_started_at is not None:
        elapsed = now - s.study_started_at
        commands = (
            Command(
                issuer=config.workstation_agent_id,
                target=config.study_display_id,
                action=ShowMessage(format_study_time(elapsed)),
            ),
        )
        if elapsed >= s.threshold_ms and not s.threshold_fired:
            return AgentStepResult(
                new_state=replace(s, threshold_fired=True),
                commands=commands,
                emitted_events=(StudyThresholdReached(config.workstation_agent_id),),
            )
        return AgentStepResult(new_state=s, commands=commands)
    return _noop(s)


# --- Relax (simple-reflex scene agent) -----------------------------------------


@dataclass(frozen=True)
class RelaxState:
    scene_active: bool = False


def relax_step(s: RelaxState, e: Event, config: AgentConfig) -> AgentStepResult:
    """Simple reflex: output depends only on the current event and the
    scene_active idempotence guard, never on deeper history."""
    kind = e.kind

    def transform(theme: str) -> tuple[Command, ...]:
        return (
            Command(
                issuer=config.relax_agent_id,
                target=config.relax_display_id,
                action=SceneTransform(theme),
            ),
        )

    if isinstance(kind, ZoneEntry) and kind.zone_id == config.relax_zone_id:
        if s.scene_active:
            return _noop(s)
        return AgentStepResult(new_state=RelaxState(scene_active=True), commands=transform(PARTICLE_THEME))
    if isinstance(kind, ZoneExit) and kind.zone_id == config.relax_zone_id:
        if not s.scene_active:
            return _noop(s)
        return AgentStepResult(new_state=RelaxState(scene_active=False), commands=transform(NEUTRAL_THEME))
    return _noop(s)


# --- Meeting (luminance-gated projector agent) ---------------------------------


@dataclass(frozen=True)
class MeetingState:
    armed: bool = False
    projector_on: bool = False
    luminance_threshold: float = DEFAULT_LUMINANCE_THRESHOLD_LUX


def meeting_step(s: MeetingState, e: Event, config: AgentConfig) -> AgentStepResult:
    """Arm on menu selection; start the meeting when the room goes dark.

    The projector may only turn on while armed and the latest luminance
    reading is below the threshold; light returning ends the meeting and
    disarms the agent.
    """
    kind = e.kind
    if isinstance(kind, MenuSelect) and kind.item == "start_meeting":
        if s.armed:
            return _noop(s)
        return AgentStepResult(new_state=replace(s, armed=True))
    if isinstance(kind, DeviceStateChanged) and kind.device_id == config.luminance_sensor_id:
        lux = kind.state.get("lux")
        if not isinstance(lux, (int, float)):
            return _noop(s)
        if s.armed and lux < s.luminance_threshold and not s.projector_on:
            return AgentStepResult(
                new_state=replace(s, projector_on=True),
                commands=(
                    Command(
                        issuer=config.meeting_agent_id,
                        target=config.projector_id,
                        action=SetPower(True),
                    ),
                    Command(
                        issuer=config.meeting_agent_id,
                        target=config.projector_id,
                        action=SetMode("meeting"),
                    ),
                ),
            )
        if lux >= s.luminance_threshold and s.projector_on:
            return AgentStepResult(
                new_state=replace(s, projector_on=False, armed=False),
                commands=(
                    Command(
                        issuer=config.meeting_agent_id,
                        target=config.projector_id,
                        action=SetPower(False),
                    ),
                ),
            )
    return _noop(s)


# --- State snapshots -------------------------------------------------------------

AgentState = Union[GuideState, WorkstationState, RelaxState, MeetingState]


def state_to_dict(state: AgentState) -> dict:
    if isinstance(state, GuideState):
        return {
            "avatar_position": state.avatar_position,
            "ignored_menu_selects": state.ignored_menu_selects,
            "phase": state.phase.value,
        }
    if isinstance(state, WorkstationState):
        return {
            "studying": state.studying,
            "study_started_at": state.study_started_at,
            "threshold_fired": state.threshold_fired,
            "threshold_ms": state.threshold_ms,
        }
    if isinstance(state, RelaxState):
        return {"scene_active": state.scene_active}
    if isinstance(state, MeetingState):
        return {
            "armed": state.armed,
            "luminance_threshold": state.luminance_threshold,
            "projector_on": state.projector_on,
        }
    raise TypeError(f"not an agent state: {type(state).__name__}")


def state_from_dict(kind: AgentKind, d: dict) -> AgentState:
    if kind == AgentKind.GUIDE:
        return GuideState(
            phase=GuidePhase(d["phase"]),
            avatar_position=d["avatar_position"],
            ignored_menu_selects=int(d["ignored_menu_selects"]),
        )
    if kind == AgentKind.WORKSTATION:
        return WorkstationState(
            studying=bool(d["studying"]),
            study_started_at=d["study_started_at"],
            threshold_ms=int(d["threshold_ms"]),
            threshold_fired=bool(d["threshold_fired"]),
        )
    if kind == AgentKind.RELAX:
        return RelaxState(scene_active=bool(d["scene_active"]))
    if kind == AgentKind.MEETING:
        return MeetingState(
            armed=bool(d["armed"]),
            projector_on=bool(d["projector_on"]),
            luminance_threshold=float(d["luminance_threshold"]),
        )
    raise ValueError(f"unknown agent kind {kind!r}")


# --- Initial states ------------------------------------------------------------


def initial_guide_state() -> GuideState:
    return GuideState()


def initial_workstation_state(config: AgentConfig) -> WorkstationState:
    return WorkstationState(threshold_ms=config.study_threshold_ms)


def initial_relax_state() -> RelaxState:
    return RelaxState()


def initial_meeting_state(config: AgentConfig) -> MeetingState:
    return MeetingState(luminance_threshold=config.luminance_threshold_lux)
