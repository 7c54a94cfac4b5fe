"""Scan-cycle, register-map, and data-store tests for the PLC runtime."""

import itertools
import random

import pytest
from hypothesis import given, strategies as st

from k4i.devices import Button, DeviceRack, KeySwitch, Led
from k4i.errors import CapacityError
from k4i.plc import Plc, PlcIdentity
from k4i.points import Direction, IoImage, PointSpec
from k4i.program import parse_program
from k4i.registers import (
    ModbusDataStore,
    Table,
    bind_register_map,
    decode_analog,
    encode_analog,
)
from k4i.signals import SignalKind


def _mini_points():
    return [
        PointSpec("button1", Direction.INPUT, SignalKind.DIGITAL, "button1.pressed"),
        PointSpec("key_switch", Direction.INPUT, SignalKind.DIGITAL, "key_switch.on"),
        PointSpec("led1", Direction.OUTPUT, SignalKind.DIGITAL, "led1.on"),
        PointSpec("led2", Direction.OUTPUT, SignalKind.DIGITAL, "led2.on"),
    ]


def _mini_rack():
    rack = DeviceRack()
    rack.add(Button("button1"))
    rack.add(KeySwitch("key_switch"))
    rack.add(Led("led1"))
    rack.add(Led("led2"))
    return rack


def _mini_plc(source="LD button1\nST led1"):
    points = _mini_points()
    rack = _mini_rack()
    program = parse_program(source, points)
    return Plc(PlcIdentity("plc-1", "slave", "test"), points, rack, program, scan_ms=50)


class TestRegisterMap:
    def test_sorted_allocation_of_coils(self):
        points = [
            PointSpec("led2", Direction.OUTPUT, SignalKind.DIGITAL, "led2.on"),
            PointSpec("led1", Direction.OUTPUT, SignalKind.DIGITAL, "led1.on"),
        ]
        table = {b.point: (b.table, b.address) for b in bind_register_map(points).bindings}
        assert table["led1"] == (Table.COILS, 0)
        assert table["led2"] == (Table.COILS, 1)

    def test_single_analog_input(self):
        points = [PointSpec("temp1", Direction.INPUT, SignalKind.ANALOG,
                            "thermo.temperature", unit="°C")]
        binding = bind_register_map(points).bindings[0]
        assert binding.table is Table.INPUT_REGISTERS
        assert binding.address == 0
        assert binding.scale == 100

    def test_steps_points_use_raw_scale(self):
        points = [PointSpec("motor_target", Direction.OUTPUT, SignalKind.ANALOG,
                            "motor.target", unit="steps")]
        assert bind_register_map(points).bindings[0].scale == 1

    def test_permutation_invariance(self):
        points = [
            PointSpec("led1", Direction.OUTPUT, SignalKind.DIGITAL, "led1.on"),
            PointSpec("button1", Direction.INPUT, SignalKind.DIGITAL, "button1.pressed"),
            PointSpec("temp1", Direction.INPUT, SignalKind.ANALOG,
                      "thermo.temperature", unit="°C"),
            PointSpec("display_value", Direction.OUTPUT, SignalKind.ANALOG,
                      "display.value", unit="count"),
        ]
        reference = bind_register_map(points)
        for permutation in itertools.permutations(points):
            assert bind_register_map(list(permutation)) == reference

    def test_capacity_error(self):
        points = [PointSpec(f"p{i:05d}", Direction.OUTPUT, SignalKind.DIGITAL, "led1.on")
                  for i in range(65537)]
        with pytest.raises(CapacityError):
            bind_register_map(points)

    @given(st.floats(min_value=0.0, max_value=655.35, allow_nan=False))
    def test_analog_round_trip_within_half_lsb(self, value):
        assert abs(decode_analog(encode_analog(value, 100), 100) - value) <= 0.005

    def test_encode_clamps(self):
        assert encode_analog(-5.0, 100) == 0
        assert encode_analog(99999.0, 100) == 0xFFFF


class TestScanCycle:
    def test_empty_program_is_a_latch_only_pass(self):
        plc = _mini_plc(source="")
        plc.rack.get("button1").pressed = True
        image = plc.scan_cycle(ts_ms=50)
        assert image.values["button1"] is True
        assert image.values["led1"] is False  # outputs untouched

    def test_latching_semantics(self):
        plc = _mini_plc()
        # device changes between cycles are only visible after the next scan
        plc.rack.get("button1").pressed = True
        assert plc.rack.get("led1").on is False
        plc.scan_cycle(ts_ms=50)
        assert plc.rack.get("led1").on is True
        assert plc.store.get_point("led1") is True

    def test_cycle_counter_increments_once(self):
        plc = _mini_plc()
        for n in range(1, 6):
            plc.scan_cycle(ts_ms=50 * n)
            assert plc.scan_count == n

    def test_image_closure_after_any_scan(self):
        plc = _mini_plc()
        declared = {p.name for p in plc.points}
        for n in range(1, 20):
            image = plc.scan_cycle(ts_ms=50 * n)
            assert set(image.values) == declared

    def test_determinism_identical_plcs_identical_traces(self):
        rng = random.Random(20260810)
        trace_in = [(rng.random() < 0.5, rng.random() < 0.5) for _ in range(1000)]

        def run(seed_plc):
            outputs = []
            for n, (pressed, key_on) in enumerate(trace_in, start=1):
                seed_plc.rack.get("button1").pressed = pressed
                seed_plc.rack.get("key_switch").on = key_on
                image = seed_plc.scan_cycle(ts_ms=50 * n)
                outputs.append((image.values["led1"], image.values["led2"]))
            return outputs

        source = "LD button1\nAND key_switch\nST led1\nLD button1\nOR key_switch\nST led2"
        assert run(_mini_plc(source)) == run(_mini_plc(source))

    def test_protocol_write_picked_up_next_scan(self):
        plc = _mini_plc(source="LD button1\nST led1")
        binding = plc.register_map.by_point()["led2"]
        plc.store.write_bit(binding.table, binding.address, True)
        # visible on the wire immediately, in the image after the next scan
        assert plc.store.get_point("led2") is True
        assert plc.image.values["led2"] is False
        plc.scan_cycle(ts_ms=50)
        assert plc.image.values["led2"] is True
        assert plc.rack.get("led2").on is True

    def test_program_overrides_protocol_write(self):
        plc = _mini_plc(source="LD button1\nST led1")
        binding = plc.register_map.by_point()["led1"]
        plc.store.write_bit(binding.table, binding.address, True)
        plc.scan_cycle(ts_ms=50)  # button1 False -> program drives led1 back off
        assert plc.image.values["led1"] is False
        assert plc.store.get_point("led1") is False

    def test_initial_image_latches_inputs(self):
        rack = _mini_rack()
        rack.get("key_switch").on = True
        points = _mini_points()
        plc = Plc(PlcIdentity("plc-1", "slave", "test"), points, rack,
                  parse_program("", points))
        assert plc.image.values["key_switch"] is True
        assert plc.scan_count == 0


class TestDataStore:
    def test_initial_image_mirror(self):
        plc = _mini_plc()
        assert plc.store.get_point("button1") is False
        assert plc.store.get_point("led1") is False

    def test_unmapped_addresses_do_not_exist(self):
        store = ModbusDataStore(bind_register_map(_mini_points()))
        assert store.is_mapped(Table.COILS, 0) is True
        assert store.is_mapped(Table.COILS, 99) is False
        assert store.is_mapped(Table.HOLDING_REGISTERS, 0) is False

    def test_digest_reflects_writes(self):
        store = ModbusDataStore(bind_register_map(_mini_points()))
        before = store.digest_state()
        store.write_bit(Table.COILS, 0, True)
        assert store.digest_state() != before


class TestIoImage:
    def test_initial_defaults(self):
        points = _mini_points() + [
            PointSpec("temp1", Direction.INPUT, SignalKind.ANALOG,
                      "thermo.temperature", unit="°C"),
        ]
        image = IoImage.initial(points)
        assert image.values["led1"] is False
        assert image.values["temp1"] == 0.0
