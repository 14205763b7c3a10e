"""Minimal MQTT 3.1.1 wire codec.

Covers the packet subset the runtime needs: CONNECT/CONNACK, PUBLISH with
QoS 0/1 (+PUBACK), SUBSCRIBE/SUBACK, UNSUBSCRIBE/UNSUBACK, PING and
DISCONNECT. No MQTT 5, no QoS 2, no will messages, no auth.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterator, Optional

CONNECT = 1
CONNACK = 2
PUBLISH = 3
PUBACK = 4
SUBSCRIBE = 8
SUBACK = 9
UNSUBSCRIBE = 10
UNSUBACK = 11
PINGREQ = 12
PINGRESP = 13
DISCONNECT = 14


class MqttProtocolError(Exception):
    pass


def _encode_string(s: str) -> bytes:
    data = s.encode("utf-8")
    if len(data) > 0xFFFF:
        raise MqttProtocolError("string too long")
    return struct.pack(">H", len(data)) + data


def _decode_string(data: bytes, offset: int) -> tuple[str, int]:
    if offset + 2 > len(data):
        raise MqttProtocolError("truncated string length")
    (n,) = struct.unpack_from(">H", data, offset)
    end = offset + 2 + n
    if end > len(data):
        raise MqttProtocolError("truncated string body")
    return data[offset + 2 : end].decode("utf-8"), end


def encode_remaining_length(n: int) -> bytes:
    if n < 0 or n > 268_435_455:
        raise MqttProtocolError(f"remaining length out of range: {n}")
    out = bytearray()
    while True:
        byte = n % 128
        n //= 128
        if n:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _packet(packet_type: int, flags: int, body: bytes) -> bytes:
    return bytes([(packet_type << 4) | flags]) + encode_remaining_length(len(body)) + body


def encode_connect(client_id: str, keepalive: int = 60, clean_session: bool = True) -> bytes:
    flags = 0x02 if clean_session else 0x00
    body = _encode_string("MQTT") + bytes([4, flags]) + struct.pack(">H", keepalive)
    body += _encode_string(client_id)
    return _packet(CONNECT, 0, body)


def encode_connack(session_present: bool = False, return_code: int = 0) -> bytes:
    return _packet(CONNACK, 0, bytes([1 if session_present else 0, return_code]))


def encode_publish(
    topic: str,
    payload: bytes,
    qos: int = 0,
    retain: bool = False,
    packet_id: Optional[int] = None,
    dup: bool = False,
) -> bytes:
    if qos not in (0, 1):
        raise MqttProtocolError(f"unsupported qos {qos}")
    if qos > 0 and packet_id is None:
        raise MqttProtocolError("qos 1 publish requires a packet id")
    flags = (0x08 if dup else 0) | (qos << 1) | (0x01 if retain else 0)
    body = _encode_string(topic)
    if qos > 0:
        body += struct.pack(">H", packet_id)
    body += payload
    return _packet(PUBLISH, flags, body)


def encode_puback(packet_id: int) -> bytes:
    return _packet(PUBACK, 0, struct.pack(">H", packet_id))


def encode_subscribe(packet_id: int, filters: list[tuple[str, int]]) -> bytes:
    body = struct.pack(">H", packet_id)
    for pattern, qos in filters:
        body += _encode_string(pattern) + bytes([qos])
    return _packet(SUBSCRIBE, 0x02, body)


def encode_suback(packet_id: int, return_codes: list[int]) -> bytes:
    return _packet(SUBACK, 0, struct.pack(">H", packet_id) + bytes(return_codes))


def encode_unsubscribe(packet_id: int, patterns: list[str]) -> bytes:
    body = struct.pack(">H", packet_id)
    for pattern in patterns:
        body += _encode_string(pattern)
    return _packet(UNSUBSCRIBE, 0x02, body)


def encode_unsuback(packet_id: int) -> bytes:
    return _packet(UNSUBACK, 0, struct.pack(">H", packet_id))


def encode_pingreq() -> bytes:
    return _packet(PINGREQ, 0, b"")


def encode_pingresp() -> bytes:
    return _packet(PINGRESP, 0, b"")


def encode_disconnect() -> bytes:
    return _packet(DISCONNECT, 0, b"")


@dataclass(frozen=True)
class ConnectPacket:
    client_id: str
    keepalive: int
    clean_session: bool


@dataclass(frozen=True)
class ConnackPacket:
    session_present: bool
    return_code: int


@dataclass(frozen=True)
class PublishPacket:
    topic: str
    payload: bytes
    qos: int
    retain: bool
    dup: bool
    packet_id: Optional[int]


@dataclass(frozen=True)
class PubackPacket:
    packet_id: int


@dataclass(frozen=True)
class SubscribePacket:
    packet_id: int
    filters: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class SubackPacket:
    packet_id: int
    return_codes: tuple[int, ...]


@dataclass(frozen=True)
class UnsubscribePacket:
    packet_id: int
    patterns: tuple[str, ...]


@dataclass(frozen=True)
class SimplePacket:
    packet_type: int


def parse_packet(packet_type: int, flags: int, body: bytes):
    if packet_type == CONNECT:
        name, offset = _decode_string(body, 0)
        if name != "MQTT" or body[offset] != 4:
            raise MqttProtocolError(f"unsupported protocol {name!r} level {body[offset]}")
        connect_flags = body[offset + 1]
        (keepalive,) = struct.unpack_from(">H", body, offset + 2)
        client_id, _ = _decode_string(body, offset + 4)
        return ConnectPacket(client_id, keepalive, bool(connect_flags & 0x02))
    if packet_type == CONNACK:
        return ConnackPacket(bool(body[0] & 0x01), body[1])
    if packet_type == PUBLISH:
        qos = (flags >> 1) & 0x03
        if qos not in (0, 1):
            raise MqttProtocolError(f"unsupported qos {qos}")
        topic, offset = _decode_string(body, 0)
        packet_id = None
        if qos > 0:
            (packet_id,) = struct.unpack_from(">H", body, offset)
            offset += 2
        return PublishPacket(
            topic=topic,
            payload=body[offset:],
            qos=qos,
            retain=bool(flags & 0x01),
            dup=bool(flags & 0x08),
            packet_id=packet_id,
        )
    if packet_type == PUBACK:
        return PubackPacket(struct.unpack(">H", body[:2])[0])
    if packet_type == SUBSCRIBE:
        (packet_id,) = struct.unpack_from(">H", body, 0)
        offset = 2
        filters = []
        while offset < len(body):
            pattern, offset = _decode_string(body, offset)
            filters.append((pattern, body[offset]))
            offset += 1
        return SubscribePacket(packet_id, tuple(filters))
    if packet_type == SUBACK:
        (packet_id,) = struct.unpack_from(">H", body, 0)
        return SubackPacket(packet_id, tuple(body[2:]))
    if packet_type == UNSUBSCRIBE:
        (packet_id,) = struct.unpack_from(">H", body, 0)
        offset = 2
        patterns = []
        while offset < len(body):
            pattern, offset = _decode_string(body, offset)
            patterns.append(pattern)
        return UnsubscribePacket(packet_id, tuple(patterns))
    if packet_type in (UNSUBACK, PINGREQ, PINGRESP, DISCONNECT):
        return SimplePacket(packet_type)
    raise MqttProtocolError(f"unsupported packet type {packet_type}")


class PacketDecoder:
    """Incremental packet framer: feed raw bytes, iterate complete packets."""

    def __init__(self) -> None:
        self._buffer = bytearray()

    def feed(self, data: bytes) -> Iterator[object]:
        self._buffer.extend(data)
        while True:
            packet = self._try_extract()
            if packet is None:
                return
            yield packet

    def _try_extract(self):
        buf = self._buffer
        if len(buf) < 2:
            return None
        packet_type = buf[0] >> 4
        flags = buf[0] & 0x0F
        # Remaining length varint, at most 4 bytes.
        remaining = 0
        multiplier = 1
        index = 1
        while True:
            if index >= len(buf):
                return None
            byte = buf[index]
            remaining += (byte & 0x7F) * multiplier
            multiplier *= 128
            index += 1
            if not byte & 0x80:
                break
            if index > 4:
                raise MqttProtocolError("remaining length varint too long")
        end = index + remaining
        if len(buf) < end:
            return None
        body = bytes(buf[index:end])
        del buf[:end]
        return parse_packet(packet_type, flags, body)
