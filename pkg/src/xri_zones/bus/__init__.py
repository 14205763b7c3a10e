"""Message-bus layer: topic scheme, payload codecs, in-process and MQTT transports.

The wire protocol (topic grammar and payload schemas) is documented in
PROTOCOL.md at the repository root.
"""

from .topics import (
    CATEGORIES,
    CHANNELS,
    BusError,
    InvalidIdentifierError,
    MalformedTopicError,
    Topic,
    decode_topic,
    encode_topic,
    topic_filter_matches,
)
from .codec import (
    Envelope,
    MissingFieldError,
    UnknownTypeError,
    action_fields,
    action_from_fields,
    canonical_json,
    command_from_dict,
    command_to_dict,
    decode_command,
    decode_event,
    encode_avatar_state,
    encode_command,
    encode_event,
    encode_state,
    event_kind_fields,
    event_kind_from_fields,
    event_topic_parts,
)
from .inprocess import InProcessBus

__all__ = [
    "BusError",
    "CATEGORIES",
    "CHANNELS",
    "Envelope",
    "InProcessBus",
    "InvalidIdentifierError",
    "MalformedTopicError",
    "MissingFieldError",
    "Topic",
    "UnknownTypeError",
    "action_fields",
    "action_from_fields",
    "canonical_json",
    "command_from_dict",
    "command_to_dict",
    "decode_command",
    "decode_event",
    "decode_topic",
    "encode_avatar_state",
    "encode_command",
    "encode_event",
    "encode_state",
    "encode_topic",
    "event_kind_fields",
    "event_kind_from_fields",
    "event_topic_parts",
    "topic_filter_matches",
]
