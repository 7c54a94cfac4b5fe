"""The virtual PLC: cyclic scan execution over a device rack.

Each scan is the canonical three-phase loop:

  1. latch   - input points are read from the device models; output points
               are refreshed from the Modbus data store so protocol writes
               (supervisory or hostile) enter the logic exactly one scan
               after they land on the wire
  2. execute - the control program runs over the latched image
  3. commit  - output points are written back to the device models and the
               whole image is mirrored into the Modbus data store

Outputs the program does not store to are retentive: they hold their last
value across scans, like a real output latch.
"""

from __future__ import annotations

from dataclasses import dataclass

from .devices import DeviceRack, FIELD_ANALOG, FIELD_DIGITAL
from .errors import ValidationError
from .points import Direction, IoImage, PointSpec, validate_point_list
from .program import ControlProgram, TimerState, execute_program, initial_timers
from .registers import ModbusDataStore, RegisterMap, bind_register_map
from .signals import SignalKind


def validate_bindings(points: list[PointSpec], rack: DeviceRack) -> None:
    """Check every point binds an existing device field of the matching kind."""
    validate_point_list(points)
    for p in points:
        info = rack.field_info(p.device_binding)
        want = FIELD_DIGITAL if p.kind is SignalKind.DIGITAL else FIELD_ANALOG
        if info.kind != want:
            raise ValidationError(
                f"point {p.name!r} is {p.kind.value} but binds {info.kind} "
                f"field {p.device_binding!r}")


@dataclass
class PlcIdentity:
    plc_id: str
    role: str  # "master" | "slave"
    model_label: str
    panel_id: str = ""


class Plc:
    """One virtual PLC instance: points, program, image, data store, devices."""

    def __init__(self, identity: PlcIdentity, points: list[PointSpec], rack: DeviceRack,
                 program: ControlProgram, scan_ms: int = 50):
        if scan_ms <= 0:
            raise ValidationError("scan_ms must be > 0")
        validate_bindings(points, rack)
        self.identity = identity
        self.points = list(points)
        self.rack = rack
        self.program = program
        self.scan_ms = scan_ms
        self.register_map: RegisterMap = bind_register_map(points)
        self.store = ModbusDataStore(self.register_map)
        self.timers: dict[str, TimerState] = initial_timers(program)
        self.scan_count = 0
        self._inputs = [p for p in points if p.direction is Direction.INPUT]
        self._outputs = [p for p in points if p.direction is Direction.OUTPUT]
        self.image = IoImage.initial(points)
        self.latch_inputs(0)
        # Mirror initial values so the wire agrees with the image before scan 1.
        for p in self.points:
            self.store.set_point(p.name, self.image.values[p.name])

    @property
    def id(self) -> str:
        return self.identity.plc_id

    def latch_inputs(self, ts_ms: int) -> None:
        values = self.image.values
        for p in self._inputs:
            raw = self.rack.read(p.device_binding)
            values[p.name] = bool(raw) if p.kind is SignalKind.DIGITAL else float(raw)
        self.image.ts_ms = ts_ms

    def scan_cycle(self, ts_ms: int, dt_ms: int | None = None) -> IoImage:
        """Run one full scan at simulated time ts_ms; returns the new image."""
        dt = self.scan_ms if dt_ms is None else dt_ms
        self.latch_inputs(ts_ms)
        values = self.image.values
        for p in self._outputs:
            values[p.name] = self.store.get_point(p.name)
        new_values, self.timers = execute_program(self.program, values, self.timers, dt)
        self.image = IoImage(new_values, ts_ms)
        for p in self._outputs:
            self.rack.write(p.device_binding, new_values[p.name])
        for p in self.points:
            self.store.set_point(p.name, new_values[p.name])
        self.scan_count += 1
        return self.image

    def point_spec(self, name: str) -> PointSpec:
        for p in self.points:
            if p.name == name:
                return p
        raise KeyError(name)

    def point_snapshot(self) -> list[dict]:
        out = []
        for p in self.points:
            out.append({
                "name": p.name,
                "direction": p.direction.value,
                "kind": p.kind.value,
                "unit": p.unit,
                "value": self.image.values[p.name],
                "ts_ms": self.image.ts_ms,
            })
        return out
