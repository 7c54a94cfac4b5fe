"""The virtual network switch connecting every PLC, the controller, and HMI.

One flat segment, star topology. Frames are opaque byte strings scheduled
for delivery at send time + link latency, dropped with a configurable
probability, and recorded in an append-only capture regardless of their
fate. All randomness comes from one seeded generator so a (seed, schedule)
pair replays bit-identically.
"""

from __future__ import annotations

import heapq
import json
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConflictError, RoutingError, ValidationError


class EndpointKind(Enum):
    PLC = "plc"
    CONTROLLER = "controller"
    ATTACKER = "attacker"
    HMI = "hmi"


@dataclass(frozen=True)
class Endpoint:
    id: str
    kind: EndpointKind


@dataclass(frozen=True)
class LinkPolicy:
    """Uniform policy for every link on the switch."""

    latency_ms: float = 0.0
    latency_jitter_ms: float = 0.0  # uniform extra in [0, jitter]
    drop_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.latency_ms < 0 or self.latency_jitter_ms < 0:
            raise ValidationError("latency must be non-negative")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValidationError("drop_probability must be within [0, 1]")


@dataclass(frozen=True)
class CaptureRecord:
    ts_ms: int
    seq: int
    src: str
    dst: str
    payload: bytes
    dropped: bool

    def to_json(self) -> dict:
        return {
            "ts_ms": self.ts_ms,
            "src": self.src,
            "dst": self.dst,
            "dropped": self.dropped,
            "payload_hex": self.payload.hex(),
        }


@dataclass
class Port:
    """Handle returned by attach(); owns the endpoint's receive queue."""

    endpoint: Endpoint
    switch: "VirtualSwitch"
    inbox: deque = field(default_factory=deque)

    def send(self, dst_id: str, payload: bytes) -> None:
        self.switch.send_frame(self, dst_id, payload)

    def recv(self) -> tuple[str, bytes] | None:
        return self.inbox.popleft() if self.inbox else None


class VirtualSwitch:
    def __init__(self, policy: LinkPolicy | None = None):
        self.policy = policy or LinkPolicy()
        self._rng = random.Random(self.policy.seed)
        self._ports: dict[str, Port] = {}
        self._handlers: dict[str, object] = {}
        self._pending: list[tuple[float, int, str, str, bytes]] = []
        self._seq = 0
        self.records: list[CaptureRecord] = []
        self.now_ms = 0

    # -- topology -------------------------------------------------------------

    def attach(self, endpoint: Endpoint) -> Port:
        if endpoint.id in self._ports:
            raise ConflictError(f"endpoint id {endpoint.id!r} already attached")
        port = Port(endpoint, self)
        self._ports[endpoint.id] = port
        return port

    def set_handler(self, endpoint_id: str, handler) -> None:
        """handler(src_id, payload) is invoked on delivery instead of queueing."""
        self._handlers[endpoint_id] = handler

    def endpoints(self) -> list[Endpoint]:
        return [port.endpoint for port in self._ports.values()]

    def port(self, endpoint_id: str) -> Port:
        return self._ports[endpoint_id]

    # -- traffic ----------------------------------------------------------------

    def send_frame(self, src: Port, dst_id: str, payload: bytes) -> None:
        if dst_id not in self._ports:
            raise RoutingError(f"no endpoint {dst_id!r} on the switch")
        dropped = False
        if self.policy.drop_probability > 0.0:
            dropped = self._rng.random() < self.policy.drop_probability
        latency = self.policy.latency_ms
        if self.policy.latency_jitter_ms > 0.0:
            latency += self._rng.uniform(0.0, self.policy.latency_jitter_ms)
        self._seq += 1
        self.records.append(CaptureRecord(self.now_ms, self._seq, src.endpoint.id,
                                          dst_id, bytes(payload), dropped))
        if not dropped:
            heapq.heappush(self._pending,
                           (self.now_ms + latency, self._seq, src.endpoint.id, dst_id,
                            bytes(payload)))

    def inject(self, attacker: Port, dst_id: str, payload: bytes) -> None:
        """Attacker-originated frame; on the wire it looks like any other."""
        if attacker.endpoint.kind is not EndpointKind.ATTACKER:
            raise ValidationError("inject requires an attacker port")
        self.send_frame(attacker, dst_id, payload)

    def deliver_due(self, now_ms: int) -> int:
        """Deliver every pending frame due at or before now_ms; returns count.

        Handlers may send responses during delivery; those are processed in
        the same call when their latency has already elapsed.
        """
        self.now_ms = now_ms
        delivered = 0
        while self._pending and self._pending[0][0] <= now_ms:
            _, _, src_id, dst_id, payload = heapq.heappop(self._pending)
            delivered += 1
            handler = self._handlers.get(dst_id)
            if handler is not None:
                handler(src_id, payload)
            else:
                self._ports[dst_id].inbox.append((src_id, payload))
        return delivered

    # -- capture ----------------------------------------------------------------

    def capture(self, endpoint_id: str | None = None) -> list[CaptureRecord]:
        if endpoint_id is None:
            return list(self.records)
        return [r for r in self.records if endpoint_id in (r.src, r.dst)]

    def export_jsonl(self, endpoint_id: str | None = None) -> str:
        lines = [json.dumps(r.to_json(), sort_keys=True) for r in self.capture(endpoint_id)]
        return "\n".join(lines) + ("\n" if lines else "")


def parse_capture_jsonl(text: str) -> list[dict]:
    """Load an exported capture; tolerant of trailing blank lines."""
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line:
            out.append(json.loads(line))
    return out
