"""External-broker bus client (MQTT 3.1.1 over TCP).

All publishes go out at QoS 1; `state/...` topics are published retained by
the runtime. Incoming messages may arrive on the reader thread but are only
ever enqueued into one ordered ingress queue; handlers run synchronously on
drain(), never concurrently. Connection loss flips status to "disconnected"
and triggers automatic reconnect with jittered exponential backoff
(base 0.5 s, cap 30 s); unacknowledged publishes are re-sent with DUP set.
"""

from __future__ import annotations

import queue
import random
import socket
import threading
import uuid
from typing import Callable, Optional

from . import mqtt_wire as wire
from .codec import Envelope
from .topics import decode_topic, encode_topic, topic_filter_matches

Handler = Callable[[Envelope], None]

CONNECTED = "connected"
DISCONNECTED = "disconnected"


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    for prefix in ("mqtt://", "tcp://"):
        if endpoint.startswith(prefix):
            endpoint = endpoint[len(prefix) :]
    if "/" in endpoint:
        endpoint = endpoint.split("/", 1)[0]
    if ":" in endpoint:
        host, port_str = endpoint.rsplit(":", 1)
        return host, int(port_str)
    return endpoint, 1883


class MqttBusClient:
    def __init__(
        self,
        client_id: Optional[str] = None,
        keepalive: int = 60,
        reconnect_base: float = 0.5,
        reconnect_cap: float = 30.0,
        rng: Optional[random.Random] = None,
    ) -> None:
        self.client_id = client_id or f"xri-{uuid.uuid4().hex[:12]}"
        self.keepalive = keepalive
        self.reconnect_base = reconnect_base
        self.reconnect_cap = reconnect_cap
        self.status = DISCONNECTED
        self.on_status: Optional[Callable[[str], None]] = None
        self._rng = rng or random.Random()
        self._ingress: "queue.Queue[tuple[str, bytes]]" = queue.Queue()
        self._subscriptions: list[tuple[str, Handler]] = []
        self._pending: "dict[int, tuple[str, bytes, bool]]" = {}
        self._next_packet_id = 1
        self._sock: Optional[socket.socket] = None
        self._send_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._stop = threading.Event()
        self._connected_once = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._host = ""
        self._port = 0

    # -- public contract --------------------------------------------------

    def connect(self, endpoint: str, wait: float = 10.0) -> None:
        """Start the connection maintenance thread; blocks up to `wait` seconds
        for the first CONNACK (0 = return immediately)."""
        self._host, self._port = parse_endpoint(endpoint)
        self._thread = threading.Thread(target=self._run, name="mqtt-client", daemon=True)
        self._thread.start()
        if wait:
            if not self._connected_once.wait(wait):
                raise ConnectionError(f"broker at {self._host}:{self._port} not reachable")

    def publish(self, envelope: Envelope, retain: bool = False) -> None:
        topic_str = encode_topic(envelope.topic)
        with self._state_lock:
            packet_id = self._claim_packet_id()
            self._pending[packet_id] = (topic_str, envelope.payload, retain)
        self._try_send(
            wire.encode_publish(topic_str, envelope.payload, qos=1, retain=retain, packet_id=packet_id)
        )

    def subscribe(self, pattern: str, handler: Handler) -> None:
        with self._state_lock:
            self._subscriptions.append((pattern, handler))
            packet_id = self._claim_packet_id()
        self._try_send(wire.encode_subscribe(packet_id, [(pattern, 1)]))

    def drain(self, max_messages: Optional[int] = None, timeout: float = 0.0) -> int:
        """Dispatch queued inbound messages to handlers, in arrival order."""
        count = 0
        while max_messages is None or count < max_messages:
            try:
                topic_str, payload = self._ingress.get(timeout=timeout) if timeout else self._ingress.get_nowait()
            except queue.Empty:
                return count
            envelope = Envelope(topic=decode_topic(topic_str), payload=payload)
            with self._state_lock:
                subs = list(self._subscriptions)
            for pattern, handler in subs:
                if topic_filter_matches(pattern, topic_str):
                    handler(envelope)
            count += 1
        return count

    def close(self) -> None:
        self._stop.set()
        with self._send_lock:
            if self._sock is not None:
                try:
                    self._sock.sendall(wire.encode_disconnect())
                    self._sock.close()
                except OSError:
                    pass
                self._sock = None
        if self._thread is not None:
            self._thread.join(timeout=5)

    # -- connection maintenance -------------------------------------------

    def _claim_packet_id(self) -> int:
        packet_id = self._next_packet_id
        self._next_packet_id = self._next_packet_id % 0xFFFF + 1
        return packet_id

    def _set_status(self, status: str) -> None:
        if status != self.status:
            self.status = status
            if self.on_status is not None:
                self.on_status(status)

    def _try_send(self, data: bytes) -> None:
        with self._send_lock:
            sock = self._sock
            if sock is None:
                return  # will be replayed after reconnect
            try:
                sock.sendall(data)
            except OSError:
                pass  # reader thread notices the broken socket

    def _run(self) -> None:
        attempt = 0
        while not self._stop.is_set():
            try:
                self._session()
                attempt = 0
            except OSError:
                pass
            finally:
                with self._send_lock:
                    if self._sock is not None:
                        try:
                            self._sock.close()
                        except OSError:
                            pass
                        self._sock = None
            self._set_status(DISCONNECTED)
            if self._stop.is_set():
                return
            delay = min(self.reconnect_cap, self.reconnect_base * (2**attempt))
            attempt += 1
            self._stop.wait(delay * self._rng.uniform(0.5, 1.0))

    def _session(self) -> None:
        sock = socket.create_connection((self._host, self._port), timeout=5)
        sock.settimeout(max(1.0, min(5.0, self.keepalive / 2)))
        decoder = wire.PacketDecoder()
        sock.sendall(wire.encode_connect(self.client_id, keepalive=self.keepalive))
        with self._send_lock:
            self._sock = sock
        connected = False
        while not self._stop.is_set():
            try:
                data = sock.recv(65536)
            except socket.timeout:
                if connected:
                    self._try_send(wire.encode_pingreq())
                continue
            if not data:
                raise ConnectionResetError("broker closed the connection")
            for packet in decoder.feed(data):
                if isinstance(packet, wire.ConnackPacket):
                    if packet.return_code != 0:
                        raise ConnectionError(f"broker refused connection: rc={packet.return_code}")
                    connected = True
                    self._on_connected()
                elif isinstance(packet, wire.PublishPacket):
                    if packet.qos == 1 and packet.packet_id is not None:
                        self._try_send(wire.encode_puback(packet.packet_id))
                    self._ingress.put((packet.topic, packet.payload))
                elif isinstance(packet, wire.PubackPacket):
                    with self._state_lock:
                        self._pending.pop(packet.packet_id, None)

    def _on_connected(self) -> None:
        self._set_status(CONNECTED)
        self._connected_once.set()
        with self._state_lock:
            subs = [pattern for pattern, _ in self._subscriptions]
            pending = sorted(self._pending.items())
        for pattern in subs:
            with self._state_lock:
                packet_id = self._claim_packet_id()
            self._try_send(wire.encode_subscribe(packet_id, [(pattern, 1)]))
        for packet_id, (topic_str, payload, retain) in pending:
            self._try_send(
                wire.encode_publish(topic_str, payload, qos=1, retain=retain, packet_id=packet_id, dup=True)
            )
