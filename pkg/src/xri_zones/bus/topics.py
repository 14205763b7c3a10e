"""Topic scheme: `xri/{space_id}/{channel}/{category}/{subject}[/{leaf}]`."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

CHANNELS = ("event", "cmd", "state")
CATEGORIES = ("user", "zone", "device", "agent", "avatar", "ui")

_RESERVED = set("/#+")


class BusError(Exception):
    code = "BUS_ERROR"


class InvalidIdentifierError(BusError):
    code = "INVALID_IDENTIFIER"

    def __init__(self, identifier: str):
        super().__init__(f"invalid topic identifier {identifier!r}")
        self.identifier = identifier


class MalformedTopicError(BusError):
    code = "MALFORMED_TOPIC"

    def __init__(self, topic: str, segment: int, reason: str):
        super().__init__(f"malformed topic {topic!r} at segment {segment}: {reason}")
        self.topic = topic
        self.segment = segment
        self.reason = reason


def _check_identifier(identifier: str) -> str:
    if not identifier or any(ch in _RESERVED for ch in identifier):
        raise InvalidIdentifierError(identifier)
    return identifier


@dataclass(frozen=True)
class Topic:
    space_id: str
    channel: str  # one of CHANNELS
    category: str  # one of CATEGORIES
    subject: str
    leaf: Optional[str] = None


def encode_topic(t: Topic) -> str:
    """Render a topic string; rejects identifiers containing `/`, `#`, `+`."""
    if t.channel not in CHANNELS:
        raise ValueError(f"unknown channel {t.channel!r}")
    if t.category not in CATEGORIES:
        raise ValueError(f"unknown category {t.category!r}")
    parts = ["xri", _check_identifier(t.space_id), t.channel, t.category, _check_identifier(t.subject)]
    if t.leaf is not None:
        parts.append(_check_identifier(t.leaf))
    return "/".join(parts)


def decode_topic(s: str) -> Topic:
    """Inverse of encode_topic on its image."""
    parts = s.split("/")
    if len(parts) not in (5, 6):
        raise MalformedTopicError(s, len(parts) - 1, f"expected 5 or 6 segments, got {len(parts)}")
    if parts[0] != "xri":
        raise MalformedTopicError(s, 0, f"root must be 'xri', got {parts[0]!r}")
    for i, part in enumerate(parts[1:], start=1):
        if not part or any(ch in "#+" for ch in part):
            raise MalformedTopicError(s, i, f"invalid identifier {part!r}")
    if parts[2] not in CHANNELS:
        raise MalformedTopicError(s, 2, f"unknown channel {parts[2]!r}")
    if parts[3] not in CATEGORIES:
        raise MalformedTopicError(s, 3, f"unknown category {parts[3]!r}")
    return Topic(
        space_id=parts[1],
        channel=parts[2],
        category=parts[3],
        subject=parts[4],
        leaf=parts[5] if len(parts) == 6 else None,
    )


def topic_filter_matches(pattern: str, topic: str) -> bool:
    """MQTT filter semantics: `+` matches one level, trailing `#` the rest."""
    p_parts = pattern.split("/")
    t_parts = topic.split("/")
    for i, p in enumerate(p_parts):
        if p == "#":
            return i == len(p_parts) - 1
        if i >= len(t_parts):
            return False
        if p != "+" and p != t_parts[i]:
            return False
    return len(p_parts) == len(t_parts)
