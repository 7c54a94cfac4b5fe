"""Discrete-time models of the control-panel field devices.

The panel carries two kinds of devices. Stimulus devices (buttons, key
switch, motion detectors) have no dynamics of their own; an operator, a
scenario timeline, or the HMI sets them. Dynamic devices (heater loop,
linear motor) integrate simple physics each simulation tick:

  heater loop   dT/dt = (P - h * (T - T_ambient)) / C     (explicit Euler)
  linear motor  position moves toward target at a fixed step rate, clamped
                to [0, max_steps]; end-stop and IR flags derive from position

The transition functions are pure: they take a state, return a new state,
and never touch shared data, so the orchestrator is free to step devices in
any deterministic order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import RangeError, ValidationError
from .signals import require_finite

ABSOLUTE_ZERO_C = -273.15

# 12-bit 1-Wire style thermometer resolution (1/16 °C).
THERMOMETER_QUANTUM_C = 0.0625

# Standard gfedcba segment encoding, bit 0 = segment a ... bit 6 = segment g.
SEVEN_SEGMENT_DIGITS = (
    0x3F,  # 0
    0x06,  # 1
    0x5B,  # 2
    0x4F,  # 3
    0x66,  # 4
    0x6D,  # 5
    0x7D,  # 6
    0x07,  # 7
    0x7F,  # 8
    0x6F,  # 9
)

EPAPER_MAX_CHARS = 64


# ---------------------------------------------------------------------------
# Pure state types and transition functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThermalState:
    """Lumped single-node model of the high-power heating LED and its sensor."""

    temperature_C: float = 25.0
    ambient_C: float = 25.0
    heat_capacity_J_per_K: float = 20.0
    loss_coeff_W_per_K: float = 0.5
    heater_power_W: float = 10.0

    def __post_init__(self):
        require_finite("temperature_C", self.temperature_C)
        require_finite("ambient_C", self.ambient_C)
        if self.temperature_C < ABSOLUTE_ZERO_C:
            raise ValidationError("temperature_C below absolute zero")
        if require_finite("heat_capacity_J_per_K", self.heat_capacity_J_per_K) <= 0:
            raise ValidationError("heat_capacity_J_per_K must be > 0")
        if require_finite("loss_coeff_W_per_K", self.loss_coeff_W_per_K) <= 0:
            raise ValidationError("loss_coeff_W_per_K must be > 0")
        if require_finite("heater_power_W", self.heater_power_W) < 0:
            raise ValidationError("heater_power_W must be >= 0")

    @property
    def equilibrium_C(self) -> float:
        return self.ambient_C + self.heater_power_W / self.loss_coeff_W_per_K


def thermal_step(state: ThermalState, dt_s: float) -> ThermalState:
    """Advance the heater loop by one explicit-Euler step.

    dt_s must stay at or below 1 s; far below the loop time constant
    (C/h = 40 s for the defaults), which keeps the integrator stable.
    """
    require_finite("dt_s", dt_s)
    if dt_s <= 0:
        raise ValidationError("dt_s must be > 0")
    if dt_s > 1.0:
        raise ValidationError("dt_s must be <= 1.0 s")
    loss = state.loss_coeff_W_per_K * (state.temperature_C - state.ambient_C)
    dT = (state.heater_power_W - loss) / state.heat_capacity_J_per_K * dt_s
    new_temp = max(state.temperature_C + dT, ABSOLUTE_ZERO_C)
    return replace(state, temperature_C=new_temp)


def quantize_temperature(temperature_C: float) -> float:
    """Round to the 1/16 °C grid the digital thermometer reports on."""
    return round(temperature_C / THERMOMETER_QUANTUM_C) * THERMOMETER_QUANTUM_C


@dataclass(frozen=True)
class MotorState:
    """Linear-motor carriage: position, travel limits, and IR position sensors."""

    position_steps: int = 0
    target_steps: int = 0
    speed_steps_per_s: float = 500.0
    max_steps: int = 4000
    ir_sensor_centers: tuple[int, int, int] = (1000, 2000, 3000)
    ir_window_steps: int = 25

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ValidationError("max_steps must be > 0")
        if not 0 <= self.position_steps <= self.max_steps:
            raise ValidationError("position_steps outside [0, max_steps]")
        if require_finite("speed_steps_per_s", self.speed_steps_per_s) <= 0:
            raise ValidationError("speed_steps_per_s must be > 0")
        if len(self.ir_sensor_centers) != 3:
            raise ValidationError("exactly three IR sensor centers required")
        if self.ir_window_steps <= 0:
            raise ValidationError("ir_window_steps must be > 0")
        object.__setattr__(self, "ir_sensor_centers", tuple(int(c) for c in self.ir_sensor_centers))

    @property
    def endstop_low(self) -> bool:
        return self.position_steps == 0

    @property
    def endstop_high(self) -> bool:
        return self.position_steps == self.max_steps

    def ir_sensor(self, index: int) -> bool:
        center = self.ir_sensor_centers[index]
        return abs(self.position_steps - center) <= self.ir_window_steps


def motor_step(state: MotorState, dt_s: float) -> MotorState:
    """Move the carriage toward its target by at most round(speed * dt) steps."""
    require_finite("dt_s", dt_s)
    if dt_s <= 0:
        raise ValidationError("dt_s must be > 0")
    budget = int(state.speed_steps_per_s * dt_s + 0.5)
    gap = state.target_steps - state.position_steps
    if gap > 0:
        new_pos = state.position_steps + min(gap, budget)
    else:
        new_pos = state.position_steps - min(-gap, budget)
    new_pos = max(0, min(state.max_steps, new_pos))
    return replace(state, position_steps=new_pos)


def light_reading(led_states: list[bool], ambient_lux: float, per_led_lux: float) -> float:
    """Lux seen by the panel light sensor: ambient plus a fixed share per lit LED."""
    if require_finite("ambient_lux", ambient_lux) < 0:
        raise ValidationError("ambient_lux must be >= 0")
    if require_finite("per_led_lux", per_led_lux) < 0:
        raise ValidationError("per_led_lux must be >= 0")
    return ambient_lux + per_led_lux * sum(1 for lit in led_states if lit)


def render_seven_segment(value: int) -> tuple[int, int]:
    """Encode 0..99 as (tens, units) gfedcba bitmasks, leading zero included."""
    if not isinstance(value, int) or isinstance(value, bool):
        raise RangeError(f"display value must be an integer, got {value!r}")
    if not 0 <= value <= 99:
        raise RangeError(f"display value {value} outside 0..99")
    return SEVEN_SEGMENT_DIGITS[value // 10], SEVEN_SEGMENT_DIGITS[value % 10]


@dataclass
class DisplayState:
    """Seven-segment bitmask pair plus the e-paper text buffer."""

    seven_segment: tuple[int, int] = (SEVEN_SEGMENT_DIGITS[0], SEVEN_SEGMENT_DIGITS[0])
    epaper_text: str = ""

    def set_epaper(self, text: str) -> None:
        if len(text) > EPAPER_MAX_CHARS:
            raise ValidationError(f"e-paper text longer than {EPAPER_MAX_CHARS} chars")
        self.epaper_text = text


# ---------------------------------------------------------------------------
# Stateful device wrappers wired into a PLC
# ---------------------------------------------------------------------------
#
# Each device exposes named fields that PLC points bind to. A field is
# declared digital or analog, and marked as a stimulus when it represents an
# operator action (those are the only fields REST/CLI writes may touch).

FIELD_DIGITAL = "digital"
FIELD_ANALOG = "analog"


@dataclass
class FieldInfo:
    kind: str
    stimulus: bool = False


class Device:
    """Base device: a bag of readable fields, some writable by the PLC."""

    fields: dict[str, FieldInfo] = {}

    def __init__(self, device_id: str):
        self.id = device_id

    def read(self, field_name: str):
        return getattr(self, field_name)

    def write(self, field_name: str, value) -> None:
        setattr(self, field_name, value)

    def step(self, dt_s: float) -> None:  # stimulus devices have no dynamics
        pass

    def state_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.fields}


class Led(Device):
    fields = {"on": FieldInfo(FIELD_DIGITAL)}

    def __init__(self, device_id: str):
        super().__init__(device_id)
        self.on = False


class Button(Device):
    fields = {"pressed": FieldInfo(FIELD_DIGITAL, stimulus=True)}

    def __init__(self, device_id: str):
        super().__init__(device_id)
        self.pressed = False


class KeySwitch(Device):
    fields = {"on": FieldInfo(FIELD_DIGITAL, stimulus=True)}

    def __init__(self, device_id: str):
        super().__init__(device_id)
        self.on = False


class MotionDetector(Device):
    fields = {"active": FieldInfo(FIELD_DIGITAL, stimulus=True)}

    def __init__(self, device_id: str):
        super().__init__(device_id)
        self.active = False


class HeaterLoop(Device):
    """High-power heating LED, its thermal mass, and the 1-Wire thermometer."""

    fields = {
        "on": FieldInfo(FIELD_DIGITAL),
        "temperature": FieldInfo(FIELD_ANALOG),
    }

    def __init__(self, device_id: str, thermal: ThermalState | None = None,
                 rated_power_W: float | None = None):
        super().__init__(device_id)
        base = thermal or ThermalState()
        self.rated_power_W = rated_power_W if rated_power_W is not None else base.heater_power_W
        self.thermal = replace(base, heater_power_W=0.0)
        self.on = False

    @property
    def temperature(self) -> float:
        return quantize_temperature(self.thermal.temperature_C)

    def step(self, dt_s: float) -> None:
        power = self.rated_power_W if self.on else 0.0
        self.thermal = thermal_step(replace(self.thermal, heater_power_W=power), dt_s)

    def state_dict(self) -> dict:
        return {
            "on": self.on,
            "temperature_C": self.thermal.temperature_C,
            "reading_C": self.temperature,
        }


class LightSensor(Device):
    """Analog light sensor coupled to the panel's three large-area LEDs."""

    fields = {"lux": FieldInfo(FIELD_ANALOG)}

    def __init__(self, device_id: str, leds: list[Led], ambient_lux: float = 100.0,
                 per_led_lux: float = 20.0):
        super().__init__(device_id)
        self._leds = leds
        self.ambient_lux = ambient_lux
        self.per_led_lux = per_led_lux

    @property
    def lux(self) -> float:
        return light_reading([led.on for led in self._leds], self.ambient_lux, self.per_led_lux)

    def state_dict(self) -> dict:
        return {"lux": self.lux}


class SevenSegmentDisplay(Device):
    fields = {"value": FieldInfo(FIELD_ANALOG)}

    def __init__(self, device_id: str):
        super().__init__(device_id)
        self._value = 0
        self._display = DisplayState()

    @property
    def value(self) -> float:
        return float(self._value)

    @value.setter
    def value(self, raw: float) -> None:
        # Device-level write clamps into range; the pure encoder stays strict.
        self._value = max(0, min(99, int(round(raw))))
        self._display.seven_segment = render_seven_segment(self._value)

    @property
    def masks(self) -> tuple[int, int]:
        return self._display.seven_segment

    def state_dict(self) -> dict:
        return {"value": self._value, "masks": list(self._display.seven_segment)}


class EPaper(Device):
    """1.54-inch e-paper module, modeled as a plain text buffer."""

    fields: dict[str, FieldInfo] = {}

    def __init__(self, device_id: str):
        super().__init__(device_id)
        self._display = DisplayState()

    @property
    def text(self) -> str:
        return self._display.epaper_text

    def show(self, text: str) -> None:
        self._display.set_epaper(text[:EPAPER_MAX_CHARS])

    def state_dict(self) -> dict:
        return {"text": self.text}


class LinearMotor(Device):
    """Stepper-driven carriage with two end stops and three IR sensors."""

    fields = {
        "position": FieldInfo(FIELD_ANALOG),
        "target": FieldInfo(FIELD_ANALOG),
        "endstop_low": FieldInfo(FIELD_DIGITAL),
        "endstop_high": FieldInfo(FIELD_DIGITAL),
        "ir1": FieldInfo(FIELD_DIGITAL),
        "ir2": FieldInfo(FIELD_DIGITAL),
        "ir3": FieldInfo(FIELD_DIGITAL),
    }

    def __init__(self, device_id: str, motor: MotorState | None = None):
        super().__init__(device_id)
        self.motor = motor or MotorState()

    @property
    def position(self) -> float:
        return float(self.motor.position_steps)

    @property
    def target(self) -> float:
        return float(self.motor.target_steps)

    @target.setter
    def target(self, steps: float) -> None:
        clamped = max(0, min(self.motor.max_steps, int(round(steps))))
        self.motor = replace(self.motor, target_steps=clamped)

    @property
    def endstop_low(self) -> bool:
        return self.motor.endstop_low

    @property
    def endstop_high(self) -> bool:
        return self.motor.endstop_high

    @property
    def ir1(self) -> bool:
        return self.motor.ir_sensor(0)

    @property
    def ir2(self) -> bool:
        return self.motor.ir_sensor(1)

    @property
    def ir3(self) -> bool:
        return self.motor.ir_sensor(2)

    def step(self, dt_s: float) -> None:
        self.motor = motor_step(self.motor, dt_s)

    def state_dict(self) -> dict:
        return {
            "position_steps": self.motor.position_steps,
            "target_steps": self.motor.target_steps,
            "endstop_low": self.endstop_low,
            "endstop_high": self.endstop_high,
            "ir": [self.ir1, self.ir2, self.ir3],
        }


class DeviceRack:
    """All devices wired to one PLC, addressable as '<device>.<field>'."""

    def __init__(self):
        self.devices: dict[str, Device] = {}

    def add(self, device: Device) -> Device:
        if device.id in self.devices:
            raise ValidationError(f"duplicate device id {device.id!r}")
        self.devices[device.id] = device
        return device

    def get(self, device_id: str) -> Device:
        return self.devices[device_id]

    def _split(self, binding: str) -> tuple[Device, str]:
        device_id, _, field_name = binding.partition(".")
        device = self.devices.get(device_id)
        if device is None or field_name not in device.fields:
            raise ValidationError(f"unknown device binding {binding!r}")
        return device, field_name

    def field_info(self, binding: str) -> FieldInfo:
        device, field_name = self._split(binding)
        return device.fields[field_name]

    def read(self, binding: str):
        device, field_name = self._split(binding)
        return device.read(field_name)

    def write(self, binding: str, value) -> None:
        device, field_name = self._split(binding)
        device.write(field_name, value)

    def step(self, dt_s: float) -> None:
        for device in self.devices.values():
            device.step(dt_s)

    def state_dict(self) -> dict:
        return {device_id: dev.state_dict() for device_id, dev in self.devices.items()}
