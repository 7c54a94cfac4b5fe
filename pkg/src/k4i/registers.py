"""Mapping of PLC points onto the four Modbus data tables.

Digital outputs land in Coils, digital inputs in Discrete Inputs, analog
inputs in Input Registers, and analog outputs/setpoints in Holding
Registers. Addresses are allocated deterministically: points sorted by name,
counting from 0 within each table, so any permutation of the same point list
produces the same map.

Analog values ride in 16-bit unsigned registers as fixed-point: scale 100
for physical units (centidegrees, centilux, centivolts) and scale 1 for raw
integer units (steps, count) whose full range would overflow at x100.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import CapacityError, ValidationError
from .points import Direction, PointSpec
from .signals import SignalKind

TABLE_CAPACITY = 65536

# Per-unit fixed-point scales; see module docstring.
UNIT_SCALE = {"°C": 100, "lux": 100, "volts": 100, "steps": 1, "count": 1}


class Table(Enum):
    COILS = "coils"
    DISCRETE_INPUTS = "discrete_inputs"
    HOLDING_REGISTERS = "holding_registers"
    INPUT_REGISTERS = "input_registers"


BIT_TABLES = (Table.COILS, Table.DISCRETE_INPUTS)
WORD_TABLES = (Table.HOLDING_REGISTERS, Table.INPUT_REGISTERS)


def table_for(point: PointSpec) -> Table:
    if point.kind is SignalKind.DIGITAL:
        return Table.COILS if point.direction is Direction.OUTPUT else Table.DISCRETE_INPUTS
    return (Table.HOLDING_REGISTERS if point.direction is Direction.OUTPUT
            else Table.INPUT_REGISTERS)


@dataclass(frozen=True)
class RegisterBinding:
    point: str
    table: Table
    address: int
    scale: int = 1


@dataclass(frozen=True)
class RegisterMap:
    bindings: tuple[RegisterBinding, ...]

    def by_point(self) -> dict[str, RegisterBinding]:
        return {b.point: b for b in self.bindings}

    def lookup(self, table: Table, address: int) -> RegisterBinding | None:
        for b in self.bindings:
            if b.table is table and b.address == address:
                return b
        return None

    def to_json(self) -> list[dict]:
        return [
            {"point": b.point, "table": b.table.value, "address": b.address, "scale": b.scale}
            for b in self.bindings
        ]


def bind_register_map(points: list[PointSpec]) -> RegisterMap:
    """Allocate table addresses for a point list; deterministic in any input order."""
    seen = set()
    for p in points:
        if p.name in seen:
            raise ValidationError(f"duplicate point name {p.name!r}")
        seen.add(p.name)
    counters = {table: 0 for table in Table}
    bindings = []
    for point in sorted(points, key=lambda p: p.name):
        table = table_for(point)
        address = counters[table]
        if address >= TABLE_CAPACITY:
            raise CapacityError(f"more than {TABLE_CAPACITY} points in table {table.value}")
        counters[table] = address + 1
        scale = UNIT_SCALE.get(point.unit, 100) if point.kind is SignalKind.ANALOG else 1
        bindings.append(RegisterBinding(point.name, table, address, scale))
    return RegisterMap(tuple(bindings))


def encode_analog(value: float, scale: int) -> int:
    """Fixed-point encode into an unsigned 16-bit register, clamped."""
    return max(0, min(0xFFFF, int(round(value * scale))))


def decode_analog(register: int, scale: int) -> float:
    return register / scale


class ModbusDataStore:
    """The wire-facing register/coil state of one PLC.

    The scan loop refreshes it once per scan; protocol servers read it at any
    time and write Coils/Holding Registers, which the next scan picks up.
    Addresses outside the register map do not exist: reads and writes to them
    must be answered with the illegal-data-address exception.
    """

    def __init__(self, register_map: RegisterMap):
        self.register_map = register_map
        self._by_point = register_map.by_point()
        self.bits: dict[Table, dict[int, bool]] = {t: {} for t in BIT_TABLES}
        self.words: dict[Table, dict[int, int]] = {t: {} for t in WORD_TABLES}
        self._scales: dict[tuple[Table, int], int] = {}
        for b in register_map.bindings:
            if b.table in BIT_TABLES:
                self.bits[b.table][b.address] = False
            else:
                self.words[b.table][b.address] = 0
            self._scales[(b.table, b.address)] = b.scale

    # -- addressing ---------------------------------------------------------

    def is_mapped(self, table: Table, address: int) -> bool:
        if table in BIT_TABLES:
            return address in self.bits[table]
        return address in self.words[table]

    # -- wire-level access (raw bits / raw 16-bit words) ---------------------

    def read_bit(self, table: Table, address: int) -> bool:
        return self.bits[table][address]

    def write_bit(self, table: Table, address: int, value: bool) -> None:
        if address not in self.bits[table]:
            raise KeyError(address)
        self.bits[table][address] = bool(value)

    def read_word(self, table: Table, address: int) -> int:
        return self.words[table][address]

    def write_word(self, table: Table, address: int, value: int) -> None:
        if address not in self.words[table]:
            raise KeyError(address)
        self.words[table][address] = value & 0xFFFF

    # -- point-level access used by the scan loop ----------------------------

    def set_point(self, name: str, value: bool | float) -> None:
        binding = self._by_point[name]
        if binding.table in BIT_TABLES:
            self.bits[binding.table][binding.address] = bool(value)
        else:
            self.words[binding.table][binding.address] = encode_analog(value, binding.scale)

    def get_point(self, name: str) -> bool | float:
        binding = self._by_point[name]
        if binding.table in BIT_TABLES:
            return self.bits[binding.table][binding.address]
        return decode_analog(self.words[binding.table][binding.address], binding.scale)

    def digest_state(self) -> tuple:
        """Hashable overall state, used by isolation and determinism tests."""
        return (
            tuple(sorted((t.value, a, v) for t in BIT_TABLES for a, v in self.bits[t].items())),
            tuple(sorted((t.value, a, v) for t in WORD_TABLES for a, v in self.words[t].items())),
        )
