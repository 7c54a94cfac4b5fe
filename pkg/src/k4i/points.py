"""I/O point declarations and the per-scan process image."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import ValidationError
from .signals import ANALOG_UNITS, SignalKind

POINT_NAME_RE = re.compile(r"^[a-z0-9_]{1,32}$")


class Direction(Enum):
    INPUT = "input"
    OUTPUT = "output"


@dataclass(frozen=True)
class PointSpec:
    """One named I/O point on a PLC and the device field it is wired to."""

    name: str
    direction: Direction
    kind: SignalKind
    device_binding: str
    unit: str | None = None

    def __post_init__(self):
        if not POINT_NAME_RE.match(self.name):
            raise ValidationError(
                f"point name {self.name!r} must be lowercase [a-z0-9_], max 32 chars")
        if self.kind is SignalKind.ANALOG:
            if self.unit not in ANALOG_UNITS:
                raise ValidationError(f"point {self.name!r}: unknown unit {self.unit!r}")
        elif self.unit is not None:
            raise ValidationError(f"point {self.name!r}: digital points carry no unit")

    @property
    def default_value(self) -> bool | float:
        return False if self.kind is SignalKind.DIGITAL else 0.0


def validate_point_list(points: list[PointSpec]) -> None:
    seen = set()
    for p in points:
        if p.name in seen:
            raise ValidationError(f"duplicate point name {p.name!r}")
        seen.add(p.name)


@dataclass
class IoImage:
    """Snapshot of every declared point, taken once per scan.

    The value map contains exactly the declared points, never more or fewer;
    ts_ms records the simulated time of the latch.
    """

    values: dict[str, bool | float] = field(default_factory=dict)
    ts_ms: int = 0

    @staticmethod
    def initial(points: list[PointSpec]) -> "IoImage":
        return IoImage({p.name: p.default_value for p in points}, 0)

    def copy(self) -> "IoImage":
        return IoImage(dict(self.values), self.ts_ms)
