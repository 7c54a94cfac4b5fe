"""Signal values exchanged between devices, PLCs, protocols, and the HMI.

Every I/O point carries either a digital (boolean) or an analog (float with a
unit) value. The variant is fixed at point creation and analog values are
always finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ValidationError

# Units the testbed knows about. "steps" and "count" are raw integers carried
# as floats; they map to Modbus registers at scale 1 instead of 100.
ANALOG_UNITS = ("°C", "lux", "steps", "volts", "count")


class SignalKind(Enum):
    DIGITAL = "digital"
    ANALOG = "analog"


@dataclass(frozen=True)
class SignalValue:
    kind: SignalKind
    value: bool | float
    unit: str | None = None

    def __post_init__(self):
        if self.kind is SignalKind.DIGITAL:
            if not isinstance(self.value, bool):
                raise ValidationError("digital signal value must be a bool")
            if self.unit is not None:
                raise ValidationError("digital signals carry no unit")
        else:
            if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
                raise ValidationError("analog signal value must be a real number")
            if not math.isfinite(self.value):
                raise ValidationError("analog signal value must be finite")
            if self.unit not in ANALOG_UNITS:
                raise ValidationError(f"unknown analog unit {self.unit!r}")
            object.__setattr__(self, "value", float(self.value))

    @staticmethod
    def digital(value: bool) -> "SignalValue":
        return SignalValue(SignalKind.DIGITAL, bool(value))

    @staticmethod
    def analog(value: float, unit: str) -> "SignalValue":
        return SignalValue(SignalKind.ANALOG, value, unit)


def require_finite(name: str, value: float) -> float:
    """Reject NaN/Inf early so they can never enter simulation state."""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    return float(value)
