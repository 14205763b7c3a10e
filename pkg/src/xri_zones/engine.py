"""Virtual-clock scenario engine.

One logical thread owns everything: events are drawn from a FIFO queue, applied
to the agents in the fixed order guide, workstation, relax, meeting
(run-to-completion: agent-raised events and device reactions join the queue
behind the current event), resulting commands are applied to the simulated
devices, and every processed event becomes one trace entry. Virtual time only
advances between injections, so a scenario is a pure function of
(script bytes, layout bytes, config): traces are byte-identical across runs
and platforms.

Auto-injected ticks fire at every multiple of tick_ms; a tick sharing a
timestamp with a scripted step is processed before the step, which is what
makes a REPL session (`tick` then verb) reproduce a script exactly.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Optional

from . import agents as ag
from . import devices as dv
from .bus import (
    InProcessBus,
    canonical_json,
    command_to_dict,
    encode_avatar_state,
    encode_command,
    encode_event,
    encode_state,
    event_kind_fields,
    event_kind_from_fields,
)
from .model import (
    AgentKind,
    Command,
    DeviceStateChanged,
    Event,
    EventKind,
    Gesture,
    MenuSelect,
    Tick,
    UserAppeared,
    UserMoved,
    Violation,
    derive_zone_events,
    validate_layout,
    zone_membership,
    SpaceLayout,
)
from .script import (
    Appear,
    DoGesture,
    EnterZone,
    MoveUser,
    ScenarioScript,
    SelectMenu,
    ToggleDevice,
    UserAction,
)


class LayoutValidationError(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(f"{v.code}({v.subject})" for v in violations))
        self.violations = violations


@dataclass
class VirtualClock:
    """Engine-owned virtual time; never reads wall time in scripted mode."""

    now: int = 0
    tick_ms: int = ag.DEFAULT_TICK_MS


class Trace:
    """An ordered list of trace entries (canonical dict form, one per event)."""

    def __init__(self, entries: Optional[list[dict]] = None):
        self.entries: list[dict] = entries if entries is not None else []

    def to_jsonl(self) -> bytes:
        return b"".join(canonical_json(e) + b"\n" for e in self.entries)

    @staticmethod
    def from_jsonl(data: bytes) -> "Trace":
        entries = [json.loads(line) for line in data.splitlines() if line.strip()]
        return Trace(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, Trace) and self.entries == other.entries


@dataclass(frozen=True)
class TraceDiff:
    seq: int
    path: str


def _first_diff(a, b, path: str) -> Optional[str]:
    if isinstance(a, dict) and isinstance(b, dict):
        for key in sorted(set(a) | set(b)):
            if key not in a or key not in b:
                return f"{path}.{key}" if path else key
            sub = _first_diff(a[key], b[key], f"{path}.{key}" if path else key)
            if sub is not None:
                return sub
        return None
    if isinstance(a, list) and isinstance(b, list):
        for i in range(min(len(a), len(b))):
            sub = _first_diff(a[i], b[i], f"{path}[{i}]")
            if sub is not None:
                return sub
        if len(a) != len(b):
            return f"{path}[{min(len(a), len(b))}]"
        return None
    if a != b or type(a) is not type(b):
        return path
    return None


def diff_traces(a: Trace, b: Trace) -> Optional[TraceDiff]:
    """Structural comparison: (seq, field path) of the first difference, or None."""
    for i in range(min(len(a.entries), len(b.entries))):
        path = _first_diff(a.entries[i], b.entries[i], "")
        if path is not None:
            return TraceDiff(seq=i, path=path)
    if len(a.entries) != len(b.entries):
        return TraceDiff(seq=min(len(a.entries), len(b.entries)), path="length")
    return None


_AGENT_ORDER = (AgentKind.GUIDE, AgentKind.WORKSTATION, AgentKind.RELAX, AgentKind.MEETING)


class Engine:
    def __init__(
        self,
        layout: SpaceLayout,
        config_overrides: Optional[dict] = None,
        bus=None,
    ):
        violations = validate_layout(layout)
        if violations:
            raise LayoutValidationError(violations)
        self.layout = layout
        self.space_id = layout.space_id
        self.config = ag.AgentConfig.from_layout(layout, config_overrides)
        self.bus = bus if bus is not None else InProcessBus()
        self.clock = VirtualClock(now=0, tick_ms=self.config.tick_ms)
        self.trace = Trace()
        self.device_states = dv.build_device_states(layout)
        # Settle sensors against the initial light states; discard the events
        # (nothing has happened yet, the readings were never anything else).
        self._resample_sensors()
        self._check_wiring()
        cfg = self.config
        self.agent_ids = {
            AgentKind.GUIDE: cfg.guide_agent_id,
            AgentKind.WORKSTATION: cfg.workstation_agent_id,
            AgentKind.RELAX: cfg.relax_agent_id,
            AgentKind.MEETING: cfg.meeting_agent_id,
        }
        self.agent_states: dict[str, ag.AgentState] = {
            cfg.guide_agent_id: ag.initial_guide_state(),
            cfg.workstation_agent_id: ag.initial_workstation_state(cfg),
            cfg.relax_agent_id: ag.initial_relax_state(),
            cfg.meeting_agent_id: ag.initial_meeting_state(cfg),
        }
        self._queue: deque[EventKind] = deque()
        self._seq = 0
        self._next_tick = self.clock.tick_ms
        self.user_position = None
        self.user_zone: Optional[str] = None
        self._publish_initial_states()

    def _check_wiring(self) -> None:
        cfg = self.config
        wired = {
            "switch": cfg.switch_id,
            "projector": cfg.projector_id,
            "luminance_sensor": cfg.luminance_sensor_id,
            "relax_display": cfg.relax_display_id,
            "study_display": cfg.study_display_id,
        }
        missing = [
            Violation("UNRESOLVED_DEVICE", dev_id, f"layout provides no {role} for the agents to target")
            for role, dev_id in wired.items()
            if dev_id not in self.device_states
        ]
        if missing:
            raise LayoutValidationError(missing)

    # -- publishing ---------------------------------------------------------

    def _publish_initial_states(self) -> None:
        for kind in _AGENT_ORDER:
            agent_id = self.agent_ids[kind]
            self.bus.publish(
                encode_state(
                    "agent", agent_id, ag.state_to_dict(self.agent_states[agent_id]), 0, 0,
                    self.space_id, "agent_state",
                ),
                retain=True,
            )
        for device_id, state in self.device_states.items():
            self.bus.publish(
                encode_state("device", device_id, state.snapshot(), 0, 0, self.space_id, "device_state"),
                retain=True,
            )
        guide = self.agent_states[self.config.guide_agent_id]
        self.bus.publish(
            encode_avatar_state(self.config.avatar_id, guide.avatar_position, 0, 0, self.space_id),
            retain=True,
        )

    # -- event intake ---------------------------------------------------------

    def enqueue(self, kind: EventKind) -> None:
        self._queue.append(kind)

    def advance_to(self, t: int) -> None:
        """Process every tick boundary at or before t, then settle the clock at t."""
        while self._next_tick <= t:
            self.clock.now = self._next_tick
            self._next_tick += self.clock.tick_ms
            self.enqueue(Tick())
            self.run_to_completion()
        if t > self.clock.now:
            self.clock.now = t

    def tick(self, n: int = 1) -> None:
        """Advance exactly n tick boundaries (REPL time control)."""
        for _ in range(n):
            self.advance_to(self._next_tick)

    def inject(self, action: UserAction, t: Optional[int] = None) -> None:
        """Inject one user action at virtual time t (defaults to now).

        Scripts, the REPL, and the bus ingress all funnel through here.
        """
        if t is not None:
            if t < self.clock.now:
                raise ValueError(f"cannot inject at t={t}, clock is already at {self.clock.now}")
            self.advance_to(t)
        if isinstance(action, Appear):
            self.enqueue(UserAppeared())
        elif isinstance(action, DoGesture):
            self.enqueue(Gesture(action.name))
        elif isinstance(action, SelectMenu):
            self.enqueue(MenuSelect(action.item))
        elif isinstance(action, (MoveUser, EnterZone)):
            position = (
                self.layout.zone(action.zone_id).center()
                if isinstance(action, EnterZone)
                else action.position
            )
            self.enqueue(UserMoved(position))
            new_zone = zone_membership(position, self.layout)
            for kind in derive_zone_events(self.user_zone, new_zone):
                self.enqueue(kind)
            self.user_position = position
            self.user_zone = new_zone
        elif isinstance(action, ToggleDevice):
            self._toggle_device(action.device_id)
        else:
            raise TypeError(f"unknown user action {type(action).__name__}")
        self.run_to_completion()

    def _toggle_device(self, device_id: str) -> None:
        state = self.device_states[device_id]
        if not isinstance(state, dv.SwitchState):
            raise ValueError(f"device {device_id!r} is not a switch")
        lights = {
            dev_id: st for dev_id, st in self.device_states.items() if isinstance(st, dv.LightState)
        }
        new_switch, new_lights, events = dv.toggle_switch(state, lights)
        self.device_states[device_id] = new_switch
        self.device_states.update(new_lights)
        for kind in events:
            self.enqueue(kind)
        for kind in self._resample_sensors():
            self.enqueue(kind)

    def _resample_sensors(self) -> list[DeviceStateChanged]:
        lights = [st for st in self.device_states.values() if isinstance(st, dv.LightState)]
        out: list[DeviceStateChanged] = []
        for dev_id, st in list(self.device_states.items()):
            if isinstance(st, dv.LuminanceSensorState):
                new_sensor, events = dv.resample_sensor(st, lights)
                self.device_states[dev_id] = new_sensor
                out.extend(events)
        return out

    # -- the core loop ---------------------------------------------------------

    def run_to_completion(self) -> None:
        while self._queue:
            self._process(self._queue.popleft())

    def _process(self, kind: EventKind) -> None:
        event = Event(t=self.clock.now, seq=self._seq, kind=kind)
        self._seq += 1
        self.bus.publish(encode_event(event, self.space_id))

        cfg = self.config
        before: dict[str, ag.AgentState] = dict(self.agent_states)
        commands: list[Command] = []
        emitted: list[EventKind] = []
        for agent_kind in _AGENT_ORDER:
            agent_id = self.agent_ids[agent_kind]
            state = self.agent_states[agent_id]
            if agent_kind == AgentKind.GUIDE:
                result = ag.guide_step(state, event, cfg)
            elif agent_kind == AgentKind.WORKSTATION:
                result = ag.workstation_step(state, event, event.t, cfg)
            elif agent_kind == AgentKind.RELAX:
                result = ag.relax_step(state, event, cfg)
            else:
                result = ag.meeting_step(state, event, cfg)
            self.agent_states[agent_id] = result.new_state
            commands.extend(result.commands)
            emitted.extend(result.emitted_events)

        device_events: list[DeviceStateChanged] = []
        any_device_change = False
        for command in commands:
            category = "device" if command.target in self.device_states else "avatar"
            self.bus.publish(encode_command(command, event.t, event.seq, self.space_id, category))
            if category == "device":
                new_state, changes = dv.apply_command(self.device_states[command.target], command, event.t)
                self.device_states[command.target] = new_state
                device_events.extend(changes)
                any_device_change = any_device_change or bool(changes)
        if any_device_change:
            device_events.extend(self._resample_sensors())

        for extra in emitted:
            self.enqueue(extra)
        for extra in device_events:
            self.enqueue(extra)

        self._publish_state_updates(event, before)
        self.trace.entries.append(
            {
                "agents": {
                    self.agent_ids[k]: {
                        "after": ag.state_to_dict(self.agent_states[self.agent_ids[k]]),
                        "before": ag.state_to_dict(before[self.agent_ids[k]]),
                    }
                    for k in _AGENT_ORDER
                },
                "commands": [command_to_dict(c) for c in commands],
                "device_events": [event_kind_fields(k) for k in device_events],
                "event": event_kind_fields(kind),
                "seq": event.seq,
                "t": event.t,
            }
        )

    def _publish_state_updates(self, event: Event, before: dict) -> None:
        for agent_kind in _AGENT_ORDER:
            agent_id = self.agent_ids[agent_kind]
            if self.agent_states[agent_id] != before[agent_id]:
                self.bus.publish(
                    encode_state(
                        "agent", agent_id, ag.state_to_dict(self.agent_states[agent_id]),
                        event.t, event.seq, self.space_id, "agent_state",
                    ),
                    retain=True,
                )
        if isinstance(event.kind, DeviceStateChanged):
            device_id = event.kind.device_id
            if device_id in self.device_states:
                self.bus.publish(
                    encode_state(
                        "device", device_id, self.device_states[device_id].snapshot(),
                        event.t, event.seq, self.space_id, "device_state",
                    ),
                    retain=True,
                )
        guide_before = before[self.config.guide_agent_id]
        guide_after = self.agent_states[self.config.guide_agent_id]
        if guide_after.avatar_position != guide_before.avatar_position:
            self.bus.publish(
                encode_avatar_state(
                    self.config.avatar_id, guide_after.avatar_position, event.t, event.seq, self.space_id
                ),
                retain=True,
            )

    def final_tick(self) -> None:
        self.advance_to(self._next_tick)

    def drain_bus(self) -> None:
        drain = getattr(self.bus, "drain", None)
        if drain is not None:
            drain()


def run_scenario(script: ScenarioScript, layout: SpaceLayout, bus=None) -> Trace:
    """Run a scripted scenario to completion; deterministic in its inputs.

    The run ends when all steps are exhausted and no agent-raised events remain,
    plus one final tick.
    """
    engine = Engine(layout, config_overrides=script.config, bus=bus)
    for step in script.steps:
        engine.inject(step.action, step.t)
    engine.final_tick()
    engine.drain_bus()
    return engine.trace


# --- Trace validation ------------------------------------------------------------


def validate_trace(trace: Trace, layout: SpaceLayout, config_overrides: Optional[dict] = None) -> list[str]:
    """Re-run every agent step recorded in a trace and check it licenses the entry.

    Each command must be attributable: the issuer's recorded state_before and
    the entry's event must reproduce exactly the commands and state_after the
    trace claims, in agent order.
    """
    cfg = ag.AgentConfig.from_layout(layout, config_overrides)
    ids = {
        AgentKind.GUIDE: cfg.guide_agent_id,
        AgentKind.WORKSTATION: cfg.workstation_agent_id,
        AgentKind.RELAX: cfg.relax_agent_id,
        AgentKind.MEETING: cfg.meeting_agent_id,
    }
    problems: list[str] = []
    for entry in trace.entries:
        seq = entry.get("seq")
        try:
            kind = event_kind_from_fields(entry["event"])
            event = Event(t=int(entry["t"]), seq=int(seq), kind=kind)
        except Exception as exc:  # malformed entry is itself a violation
            problems.append(f"seq {seq}: unreadable event: {exc}")
            continue
        rebuilt_commands = []
        for agent_kind in _AGENT_ORDER:
            agent_id = ids[agent_kind]
            states = entry["agents"].get(agent_id)
            if states is None:
                problems.append(f"seq {seq}: agent {agent_id!r} missing from entry")
                continue
            state_before = ag.state_from_dict(agent_kind, states["before"])
            if agent_kind == AgentKind.GUIDE:
                result = ag.guide_step(state_before, event, cfg)
            elif agent_kind == AgentKind.WORKSTATION:
                result = ag.workstation_step(state_before, event, event.t, cfg)
            elif agent_kind == AgentKind.RELAX:
                result = ag.relax_step(state_before, event, cfg)
            else:
                result = ag.meeting_step(state_before, event, cfg)
            if ag.state_to_dict(result.new_state) != states["after"]:
                problems.append(f"seq {seq}: agent {agent_id!r} state_after not licensed by its step function")
            rebuilt_commands.extend(command_to_dict(c) for c in result.commands)
        if rebuilt_commands != entry["commands"]:
            problems.append(f"seq {seq}: commands not licensed by the agents' step functions")
    return problems
