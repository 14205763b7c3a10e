"""Interactive event injection.

Line commands map to the same injection path as scripts, so a typed session
and a script with matching times produce equal traces:

    appear              user enters the space
    gesture NAME        e.g. gesture thumbs_up
    move X Y            drag the user to floorplan coordinates (meters)
    enter ZONE          move the user to a zone's center
    select ITEM         press a menu button
    toggle DEVICE       flip a physical switch
    tick [N]            advance N tick boundaries (default 1)
    state               print agent and device states
    quit                exit

In --realtime mode a timer maps wall-clock time to virtual ticks; commands and
ticks feed one ingress queue and the loop below is the only consumer.
"""

from __future__ import annotations

import json
import queue
import sys
import threading
import time
from typing import Optional, TextIO

from . import agents as ag
from .engine import Engine
from .model import Position, SpaceLayout
from .script import Appear, DoGesture, EnterZone, MoveUser, SelectMenu, ToggleDevice

USAGE = "commands: appear | gesture NAME | move X Y | enter ZONE | select ITEM | toggle DEV | tick [N] | state | quit"


def _parse_command(line: str):
    parts = line.split()
    if not parts:
        return None
    verb, args = parts[0], parts[1:]
    try:
        if verb == "appear" and not args:
            return Appear()
        if verb == "gesture" and len(args) == 1:
            return DoGesture(args[0])
        if verb == "move" and len(args) == 2:
            return MoveUser(Position(float(args[0]), float(args[1])))
        if verb == "enter" and len(args) == 1:
            return EnterZone(args[0])
        if verb == "select" and len(args) == 1:
            return SelectMenu(args[0])
        if verb == "toggle" and len(args) == 1:
            return ToggleDevice(args[0])
        if verb == "tick" and len(args) <= 1:
            return ("tick", int(args[0]) if args else 1)
        if verb in ("state", "quit", "help"):
            return (verb,)
    except ValueError:
        return None
    return None


def _print_new_entries(engine: Engine, start: int, out: TextIO) -> None:
    for entry in engine.trace.entries[start:]:
        event = entry["event"]
        detail = {k: v for k, v in event.items() if k != "type"}
        out.write(f"#{entry['seq']} t={entry['t']} {event['type']}"
                  f"{' ' + json.dumps(detail, sort_keys=True) if detail else ''}\n")
        for c in entry["commands"]:
            action = dict(c["action"])
            action_type = action.pop("type")
            args = json.dumps(action, sort_keys=True) if action else ""
            out.write(f"  -> {c['issuer']} {action_type} {c['target']} {args}\n")


def _print_state(engine: Engine, out: TextIO) -> None:
    for agent_id, state in engine.agent_states.items():
        out.write(f"agent {agent_id}: {json.dumps(ag.state_to_dict(state), sort_keys=True)}\n")
    for device_id, state in engine.device_states.items():
        out.write(f"device {device_id}: {json.dumps(state.snapshot(), sort_keys=True)}\n")
    out.write(f"clock t={engine.clock.now} user_zone={engine.user_zone}\n")


def interactive_repl(
    layout: SpaceLayout,
    config_overrides: Optional[dict] = None,
    realtime: bool = False,
    bus=None,
    stdin: Optional[TextIO] = None,
    stdout: Optional[TextIO] = None,
    trace_path: Optional[str] = None,
) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    engine = Engine(layout, config_overrides=config_overrides, bus=bus)
    ingress: "queue.Queue" = queue.Queue()
    stop = threading.Event()

    def read_input() -> None:
        for line in stdin:
            ingress.put(("line", line))
            if stop.is_set():
                return
        ingress.put(("eof", None))

    if realtime:
        def timer() -> None:
            interval = engine.clock.tick_ms / 1000.0
            while not stop.is_set():
                time.sleep(interval)
                ingress.put(("tick", 1))

        threading.Thread(target=read_input, daemon=True).start()
        threading.Thread(target=timer, daemon=True).start()

    def finish() -> int:
        stop.set()
        engine.drain_bus()
        if trace_path:
            with open(trace_path, "wb") as fh:
                fh.write(engine.trace.to_jsonl())
        return 0

    while True:
        if realtime:
            kind, payload = ingress.get()
            if kind == "eof":
                return finish()
            if kind == "tick":
                engine.tick(payload)
                continue
            line = payload
        else:
            line = stdin.readline()
            if not line:
                return finish()
        command = _parse_command(line.split("#", 1)[0].strip())
        if command is None:
            if line.strip():
                stdout.write(USAGE + "\n")
            continue
        if isinstance(command, tuple):
            if command[0] == "quit":
                return finish()
            if command[0] == "help":
                stdout.write(USAGE + "\n")
            elif command[0] == "state":
                _print_state(engine, stdout)
            else:  # tick N
                start = len(engine.trace.entries)
                engine.tick(command[1])
                _print_new_entries(engine, start, stdout)
            continue
        start = len(engine.trace.entries)
        engine.inject(command)
        engine.drain_bus()
        _print_new_entries(engine, start, stdout)
