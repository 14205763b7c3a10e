"""Minimal in-process MQTT 3.1.1 broker.

A development and test convenience so the runtime and the browser dashboard
can run without an external broker: QoS 0/1, retained messages, `+`/`#`
filters, one listener for raw TCP and one speaking MQTT over WebSocket (the
WebSocket listener also answers plain HTTP GETs for registered static
documents, e.g. the layout file). Not a production broker: no persistence,
no auth, no QoS 1 redelivery to subscribers.
"""

from __future__ import annotations

import base64
import hashlib
import socket
import struct
import threading
from typing import Optional

from . import mqtt_wire as wire
from .topics import topic_filter_matches

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class _TcpTransport:
    def __init__(self, sock: socket.socket):
        self._sock = sock

    def recv(self) -> bytes:
        return self._sock.recv(65536)

    def send(self, data: bytes) -> None:
        self._sock.sendall(data)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class _WsTransport:
    """WebSocket framing over an already-upgraded socket (binary frames)."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._buffer = bytearray()
        self._fragments = bytearray()

    def recv(self) -> bytes:
        out = bytearray()
        while not out:
            frame = self._read_frame()
            if frame is None:
                return b""
            fin, opcode, payload = frame
            if opcode == 0x8:  # close
                return b""
            if opcode == 0x9:  # ping -> pong
                self._send_frame(0xA, payload)
                continue
            if opcode in (0x0, 0x1, 0x2):
                self._fragments.extend(payload)
                if fin:
                    out.extend(self._fragments)
                    self._fragments.clear()
        return bytes(out)

    def _fill(self, n: int) -> bool:
        while len(self._buffer) < n:
            data = self._sock.recv(65536)
            if not data:
                return False
            self._buffer.extend(data)
        return True

    def _read_frame(self):
        if not self._fill(2):
            return None
        b0, b1 = self._buffer[0], self._buffer[1]
        fin = bool(b0 & 0x80)
        opcode = b0 & 0x0F
        masked = bool(b1 & 0x80)
        length = b1 & 0x7F
        offset = 2
        if length == 126:
            if not self._fill(offset + 2):
                return None
            (length,) = struct.unpack_from(">H", self._buffer, offset)
            offset += 2
        elif length == 127:
            if not self._fill(offset + 8):
                return None
            (length,) = struct.unpack_from(">Q", self._buffer, offset)
            offset += 8
        mask = b""
        if masked:
            if not self._fill(offset + 4):
                return None
            mask = bytes(self._buffer[offset : offset + 4])
            offset += 4
        if not self._fill(offset + length):
            return None
        payload = bytes(self._buffer[offset : offset + length])
        del self._buffer[: offset + length]
        if masked:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return fin, opcode, payload

    def _send_frame(self, opcode: int, payload: bytes) -> None:
        header = bytearray([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header.append(n)
        elif n <= 0xFFFF:
            header.append(126)
            header.extend(struct.pack(">H", n))
        else:
            header.append(127)
            header.extend(struct.pack(">Q", n))
        self._sock.sendall(bytes(header) + payload)

    def send(self, data: bytes) -> None:
        self._send_frame(0x2, data)

    def close(self) -> None:
        try:
            self._send_frame(0x8, b"")
        except OSError:
            pass
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class _Session:
    def __init__(self, broker: "MiniBroker", transport) -> None:
        self.broker = broker
        self.transport = transport
        self.subscriptions: list[tuple[str, int]] = []
        self.client_id = ""
        self._next_packet_id = 1
        self._send_lock = threading.Lock()
        self.alive = True

    def deliver(self, topic: str, payload: bytes, qos: int, retain: bool) -> None:
        packet_id = None
        if qos > 0:
            packet_id = self._next_packet_id
            self._next_packet_id = self._next_packet_id % 0xFFFF + 1
        try:
            with self._send_lock:
                self.transport.send(wire.encode_publish(topic, payload, qos=qos, retain=retain, packet_id=packet_id))
        except OSError:
            self.alive = False

    def _send(self, data: bytes) -> None:
        with self._send_lock:
            self.transport.send(data)

    def run(self) -> None:
        decoder = wire.PacketDecoder()
        try:
            while self.alive:
                data = self.transport.recv()
                if not data:
                    break
                for packet in decoder.feed(data):
                    self._handle(packet)
        except (OSError, wire.MqttProtocolError):
            pass
        finally:
            self.alive = False
            self.broker._detach(self)
            try:
                self.transport.close()
            except OSError:
                pass

    def _handle(self, packet) -> None:
        if isinstance(packet, wire.ConnectPacket):
            self.client_id = packet.client_id
            self._send(wire.encode_connack(session_present=False, return_code=0))
        elif isinstance(packet, wire.PublishPacket):
            if packet.qos == 1 and packet.packet_id is not None:
                self._send(wire.encode_puback(packet.packet_id))
            self.broker._route(packet)
        elif isinstance(packet, wire.SubscribePacket):
            self._send(wire.encode_suback(packet.packet_id, [qos for _, qos in packet.filters]))
            self.broker._on_subscribe(self, packet.filters)
        elif isinstance(packet, wire.UnsubscribePacket):
            self.subscriptions = [
                (pattern, qos) for pattern, qos in self.subscriptions if pattern not in packet.patterns
            ]
            self._send(wire.encode_unsuback(packet.packet_id))
        elif isinstance(packet, wire.SimplePacket):
            if packet.packet_type == wire.PINGREQ:
                self._send(wire.encode_pingresp())
            elif packet.packet_type == wire.DISCONNECT:
                self.alive = False
        # PUBACK from subscribers is accepted and dropped (no redelivery).


class MiniBroker:
    def __init__(self, host: str = "127.0.0.1", port: int = 0, ws_port: Optional[int] = None) -> None:
        self.host = host
        self.port = port
        self.ws_port = ws_port
        self.static_docs: dict[str, tuple[str, bytes]] = {}
        self._retained: dict[str, tuple[bytes, int]] = {}
        self._sessions: list[_Session] = []
        self._lock = threading.Lock()  # session list + retained + global routing order
        self._listeners: list[socket.socket] = []
        self._threads: list[threading.Thread] = []
        self._stopping = threading.Event()

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "MiniBroker":
        tcp = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        tcp.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        tcp.bind((self.host, self.port))
        tcp.listen(16)
        self.port = tcp.getsockname()[1]
        self._listeners.append(tcp)
        self._spawn(self._accept_loop, tcp, False)
        if self.ws_port is not None:
            ws = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            ws.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            ws.bind((self.host, self.ws_port))
            ws.listen(16)
            self.ws_port = ws.getsockname()[1]
            self._listeners.append(ws)
            self._spawn(self._accept_loop, ws, True)
        return self

    def stop(self) -> None:
        self._stopping.set()
        for listener in self._listeners:
            try:
                listener.close()
            except OSError:
                pass
        with self._lock:
            sessions = list(self._sessions)
        for session in sessions:
            session.alive = False
            try:
                session.transport.close()
            except OSError:
                pass
        for thread in self._threads:
            thread.join(timeout=2)

    def _spawn(self, target, *args) -> None:
        thread = threading.Thread(target=target, args=args, daemon=True)
        thread.start()
        self._threads.append(thread)

    def _accept_loop(self, listener: socket.socket, websocket: bool) -> None:
        while not self._stopping.is_set():
            try:
                sock, _ = listener.accept()
            except OSError:
                return
            self._spawn(self._serve_connection, sock, websocket)

    def _serve_connection(self, sock: socket.socket, websocket: bool) -> None:
        if websocket:
            transport = self._upgrade(sock)
            if transport is None:
                return
        else:
            transport = _TcpTransport(sock)
        session = _Session(self, transport)
        with self._lock:
            self._sessions.append(session)
        session.run()

    # -- websocket / static HTTP -------------------------------------------

    def _upgrade(self, sock: socket.socket) -> Optional[_WsTransport]:
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = sock.recv(8192)
            if not chunk:
                sock.close()
                return None
            data += chunk
            if len(data) > 65536:
                sock.close()
                return None
        head = data.split(b"\r\n\r\n", 1)[0].decode("latin-1")
        lines = head.split("\r\n")
        request = lines[0].split(" ")
        headers = {}
        for line in lines[1:]:
            if ":" in line:
                name, value = line.split(":", 1)
                headers[name.strip().lower()] = value.strip()
        if headers.get("upgrade", "").lower() != "websocket":
            self._serve_static(sock, request[1] if len(request) > 1 else "/")
            return None
        key = headers.get("sec-websocket-key", "")
        accept = base64.b64encode(hashlib.sha1((key + _WS_GUID).encode()).digest()).decode()
        response = (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n"
        )
        if "mqtt" in headers.get("sec-websocket-protocol", ""):
            response += "Sec-WebSocket-Protocol: mqtt\r\n"
        response += "\r\n"
        sock.sendall(response.encode("latin-1"))
        return _WsTransport(sock)

    def _serve_static(self, sock: socket.socket, path: str) -> None:
        doc = self.static_docs.get(path.split("?", 1)[0])
        if doc is None:
            body = b"not found"
            response = (
                "HTTP/1.1 404 Not Found\r\nContent-Type: text/plain\r\n"
                f"Content-Length: {len(body)}\r\nAccess-Control-Allow-Origin: *\r\n\r\n"
            )
        else:
            content_type, body = doc
            response = (
                "HTTP/1.1 200 OK\r\n"
                f"Content-Type: {content_type}\r\n"
                f"Content-Length: {len(body)}\r\n"
                "Access-Control-Allow-Origin: *\r\n\r\n"
            )
        try:
            sock.sendall(response.encode("latin-1") + body)
        finally:
            sock.close()

    # -- routing -------------------------------------------------------------

    def _on_subscribe(self, session: _Session, filters) -> None:
        with self._lock:
            session.subscriptions.extend(filters)
            retained = [
                (topic, payload, qos)
                for topic, (payload, qos) in sorted(self._retained.items())
                for pattern, sub_qos in filters
                if topic_filter_matches(pattern, topic)
            ]
            for topic, payload, qos in retained:
                session.deliver(topic, payload, min(qos, 1), retain=True)

    def _route(self, packet: wire.PublishPacket) -> None:
        with self._lock:
            if packet.retain:
                if packet.payload:
                    self._retained[packet.topic] = (packet.payload, packet.qos)
                else:
                    self._retained.pop(packet.topic, None)
            for session in self._sessions:
                if not session.alive:
                    continue
                best: Optional[int] = None
                for pattern, sub_qos in session.subscriptions:
                    if topic_filter_matches(pattern, packet.topic):
                        granted = min(packet.qos, sub_qos)
                        best = granted if best is None else max(best, granted)
                if best is not None:
                    session.deliver(packet.topic, packet.payload, best, retain=False)

    def _detach(self, session: _Session) -> None:
        with self._lock:
            if session in self._sessions:
                self._sessions.remove(session)
