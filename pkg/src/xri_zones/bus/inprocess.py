"""Deterministic single-threaded bus for scripted runs and tests.

Delivery happens synchronously on drain(), in global publish order. Retained
messages mirror broker semantics: a late subscriber receives the latest
retained payload per matching topic at its next drain.
"""

from __future__ import annotations

from collections import deque
from typing import Callable

from .codec import Envelope
from .topics import decode_topic, encode_topic, topic_filter_matches

Handler = Callable[[Envelope], None]


class InProcessBus:
    def __init__(self) -> None:
        self._subscriptions: list[tuple[str, Handler]] = []
        self._pending: deque[tuple[Handler, Envelope]] = deque()
        self._retained: dict[str, Envelope] = {}
        self.published: list[Envelope] = []  # full publish log, in order

    def connect(self, endpoint: str | None = None) -> None:
        del endpoint

    def publish(self, envelope: Envelope, retain: bool = False) -> None:
        topic_str = encode_topic(envelope.topic)
        self.published.append(envelope)
        if retain:
            self._retained[topic_str] = envelope
        for pattern, handler in self._subscriptions:
            if topic_filter_matches(pattern, topic_str):
                self._pending.append((handler, envelope))

    def subscribe(self, pattern: str, handler: Handler) -> None:
        self._subscriptions.append((pattern, handler))
        # Retained messages are replayed to late subscribers, oldest topic first
        # by topic string for determinism.
        for topic_str in sorted(self._retained):
            if topic_filter_matches(pattern, topic_str):
                self._pending.append((handler, self._retained[topic_str]))

    def drain(self) -> int:
        """Deliver everything queued; returns the number of deliveries."""
        count = 0
        while self._pending:
            handler, envelope = self._pending.popleft()
            handler(envelope)
            count += 1
        return count

    def retained(self, topic_str: str) -> Envelope | None:
        self._validate(topic_str)
        return self._retained.get(topic_str)

    @staticmethod
    def _validate(topic_str: str) -> None:
        decode_topic(topic_str)
