"""Headless runtime: the engine driven entirely over an MQTT broker.

Remote peers (the browser dashboard, test drivers) inject user actions by
publishing protocol envelopes; the runtime assigns seq at ingress, runs the
agents, actuates the simulated devices, and publishes commands plus retained
state topics for late-joining subscribers.

Time sources: with virtual_clock=True the clock advances only on tick
commands published to `cmd/device/clock` (deterministic, used by the UI
equivalence test); otherwise a wall-clock timer injects one tick every
tick_ms of real time. Either way one ingress queue feeds the single engine
loop. Publisher seqs are used to drop QoS-1 duplicate deliveries, so
injectors must use seqs that are unique per space (epoch-derived values work).
"""

from __future__ import annotations

import json
import threading
from collections import deque
from typing import Optional

from .bus.broker import MiniBroker
from .bus.codec import Envelope
from .bus.mqtt_client import MqttBusClient, parse_endpoint
from .engine import Engine
from .model import Position, SpaceLayout, layout_to_json
from .script import Appear, DoGesture, MoveUser, SelectMenu, ToggleDevice


class ZoneRuntimeService:
    def __init__(
        self,
        layout: SpaceLayout,
        broker_url: str,
        config_overrides: Optional[dict] = None,
        virtual_clock: bool = False,
        builtin_broker: bool = False,
        ws_port: Optional[int] = None,
        client: Optional[MqttBusClient] = None,
    ) -> None:
        self.layout = layout
        self.broker_url = broker_url
        self.virtual_clock = virtual_clock
        self.broker: Optional[MiniBroker] = None
        if builtin_broker:
            host, port = parse_endpoint(broker_url)
            self.broker = MiniBroker(host=host, port=port, ws_port=ws_port)
            self.broker.static_docs["/layout.json"] = (
                "application/json",
                layout_to_json(layout).encode("utf-8"),
            )
            self.broker.start()
        self.client = client or MqttBusClient(client_id=f"xri-runtime-{layout.space_id}")
        self.engine = Engine(layout, config_overrides=config_overrides, bus=self.client)
        self._seen_seqs: set = set()
        self._seen_order: deque = deque()
        self._stop = threading.Event()
        self._lock = threading.Lock()  # engine is single-consumer; timer + ingress share it

    # -- ingress ----------------------------------------------------------------

    def _remember(self, seq) -> bool:
        """True when seq is new; drops QoS-1 duplicate deliveries."""
        if seq in self._seen_seqs:
            return False
        self._seen_seqs.add(seq)
        self._seen_order.append(seq)
        if len(self._seen_order) > 4096:
            self._seen_seqs.discard(self._seen_order.popleft())
        return True

    def _on_injected(self, envelope: Envelope) -> None:
        topic = envelope.topic
        try:
            payload = envelope.payload_dict()
        except json.JSONDecodeError:
            return
        if not self._remember((topic.channel, payload.get("seq"))):
            return
        type_name = payload.get("type")
        action = None
        if topic.channel == "event":
            if type_name == "user_appeared":
                action = Appear()
            elif type_name == "gesture" and "gesture" in payload:
                action = DoGesture(payload["gesture"])
            elif type_name == "user_moved" and "x" in payload and "y" in payload:
                action = MoveUser(Position(float(payload["x"]), float(payload["y"])))
            elif type_name == "menu_select" and "item" in payload:
                action = SelectMenu(payload["item"])
        elif topic.channel == "cmd" and topic.category == "device":
            if type_name == "toggle" and topic.subject in self.engine.device_states:
                action = ToggleDevice(topic.subject)
            elif type_name == "tick" and topic.subject == "clock":
                with self._lock:
                    self.engine.tick(int(payload.get("count", 1)))
                return
        if action is None:
            return
        with self._lock:
            self.engine.inject(action)

    # -- lifecycle ----------------------------------------------------------------

    def start(self, wait: float = 10.0) -> None:
        space = self.layout.space_id
        self.client.connect(self.broker_url, wait=wait)
        self.client.subscribe(f"xri/{space}/event/user/#", self._on_injected)
        self.client.subscribe(f"xri/{space}/event/ui/#", self._on_injected)
        self.client.subscribe(f"xri/{space}/cmd/device/+", self._on_injected)
        if not self.virtual_clock:
            threading.Thread(target=self._timer, daemon=True).start()

    def _timer(self) -> None:
        interval = self.engine.clock.tick_ms / 1000.0
        while not self._stop.wait(interval):
            with self._lock:
                self.engine.tick(1)

    def run_forever(self) -> None:
        while not self._stop.is_set():
            self.client.drain(timeout=0.2)

    def process_pending(self, timeout: float = 0.2) -> int:
        return self.client.drain(timeout=timeout)

    def stop(self) -> None:
        self._stop.set()
        self.client.close()
        if self.broker is not None:
            self.broker.stop()
