"""In-process publish/subscribe telemetry bus with MQTT-style semantics.

Topics are slash-separated paths; point updates use

    k4i/panel/<panel>/plc/<plc>/point/<point>

and game progress is pushed under k4i/game/... . Subscription patterns
support "+" (exactly one level) and a trailing "#" (any remainder). The bus
keeps exactly one retained message per topic - the latest - and new
subscribers receive matching retained messages before any live traffic.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class TelemetryMessage:
    topic: str
    payload: str  # JSON text, {"ts": <ms>, "value": <bool|number>} for points
    retained: bool
    ts_ms: int

    def to_json(self) -> dict:
        return {
            "topic": self.topic,
            "payload": json.loads(self.payload),
            "retained": self.retained,
            "ts_ms": self.ts_ms,
        }


def point_topic(panel_index: int, plc_id: str, point: str) -> str:
    return f"k4i/panel/{panel_index}/plc/{plc_id}/point/{point}"


def validate_pattern(pattern: str) -> list[str]:
    if not pattern:
        raise ValidationError("empty subscription pattern")
    parts = pattern.split("/")
    for i, part in enumerate(parts):
        if part == "":
            raise ValidationError(f"empty level in pattern {pattern!r}")
        if part == "#" and i != len(parts) - 1:
            raise ValidationError("'#' is only valid as the final level")
        if ("+" in part or "#" in part) and part not in ("+", "#"):
            raise ValidationError(f"wildcard must stand alone in level {part!r}")
    return parts


def topic_matches(pattern_parts: list[str], topic: str) -> bool:
    levels = topic.split("/")
    for i, part in enumerate(pattern_parts):
        if part == "#":
            return True
        if i >= len(levels):
            return False
        if part != "+" and part != levels[i]:
            return False
    return len(levels) == len(pattern_parts)


class Subscription:
    """FIFO stream of matching messages for one subscriber."""

    def __init__(self, pattern: str):
        self.pattern = pattern
        self._parts = validate_pattern(pattern)
        self.queue: deque[TelemetryMessage] = deque()

    def matches(self, topic: str) -> bool:
        return topic_matches(self._parts, topic)

    def pop(self) -> TelemetryMessage | None:
        return self.queue.popleft() if self.queue else None

    def drain(self) -> list[TelemetryMessage]:
        out = list(self.queue)
        self.queue.clear()
        return out


class TelemetryBus:
    def __init__(self, record_history: bool = True):
        self.retained: dict[str, TelemetryMessage] = {}
        self.subscriptions: list[Subscription] = []
        self.history: list[TelemetryMessage] | None = [] if record_history else None

    def publish(self, topic: str, payload: str, ts_ms: int, retain: bool = True) -> TelemetryMessage:
        message = TelemetryMessage(topic, payload, False, ts_ms)
        if retain:
            self.retained[topic] = TelemetryMessage(topic, payload, True, ts_ms)
        if self.history is not None:
            self.history.append(message)
        for sub in self.subscriptions:
            if sub.matches(topic):
                sub.queue.append(message)
        return message

    def publish_point_update(self, panel_index: int, plc_id: str, point: str,
                             value: bool | float, ts_ms: int) -> TelemetryMessage:
        payload = json.dumps({"ts": ts_ms, "value": value})
        return self.publish(point_topic(panel_index, plc_id, point), payload, ts_ms)

    def publish_game_event(self, event: dict, ts_ms: int) -> TelemetryMessage:
        return self.publish("k4i/game/events", json.dumps(event, sort_keys=True),
                            ts_ms, retain=False)

    def subscribe(self, pattern: str) -> Subscription:
        """Attach a subscriber; its queue starts with matching retained messages."""
        sub = Subscription(pattern)
        for topic in sorted(self.retained):
            if sub.matches(topic):
                sub.queue.append(self.retained[topic])
        self.subscriptions.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        if sub in self.subscriptions:
            self.subscriptions.remove(sub)

    def retained_matching(self, pattern: str) -> list[TelemetryMessage]:
        parts = validate_pattern(pattern)
        return [self.retained[t] for t in sorted(self.retained) if topic_matches(parts, t)]
