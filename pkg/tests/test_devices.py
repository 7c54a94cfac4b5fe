"""Field-device model tests: thermal loop, motor kinematics, sensors, displays."""

import math

import pytest
from hypothesis import given, strategies as st

from k4i.devices import (
    Button,
    DeviceRack,
    EPaper,
    HeaterLoop,
    Led,
    LightSensor,
    LinearMotor,
    MotorState,
    SevenSegmentDisplay,
    ThermalState,
    light_reading,
    motor_step,
    quantize_temperature,
    render_seven_segment,
    thermal_step,
)
from k4i.errors import RangeError, ValidationError


def closed_form_temperature(t_s, ambient, power, loss, capacity, t0=None):
    """Independent analytic solution of dT/dt = (P - h (T - T_amb)) / C."""
    start = ambient if t0 is None else t0
    equilibrium = ambient + power / loss
    return equilibrium + (start - equilibrium) * math.exp(-loss * t_s / capacity)


class TestThermal:
    def test_fixed_point_with_heater_off(self):
        state = ThermalState(temperature_C=25.0, ambient_C=25.0, heater_power_W=0.0)
        for dt in (0.001, 0.01, 0.5, 1.0):
            assert thermal_step(state, dt).temperature_C == 25.0

    def test_equilibrium_is_a_fixed_point(self):
        # T = ambient + P/h = 25 + 10/0.5 = 45
        state = ThermalState(temperature_C=45.0, ambient_C=25.0, heater_power_W=10.0,
                             loss_coeff_W_per_K=0.5, heat_capacity_J_per_K=20.0)
        assert thermal_step(state, 0.7).temperature_C == pytest.approx(45.0)

    def test_heating_curve_matches_closed_form_at_40s(self):
        state = ThermalState(temperature_C=25.0, ambient_C=25.0, heater_power_W=10.0,
                             loss_coeff_W_per_K=0.5, heat_capacity_J_per_K=20.0)
        dt = 0.01
        for _ in range(4000):  # 40 s
            state = thermal_step(state, dt)
        expected = closed_form_temperature(40.0, 25.0, 10.0, 0.5, 20.0)
        assert expected == pytest.approx(37.642, abs=0.001)
        assert state.temperature_C == pytest.approx(expected, abs=0.05)

    def test_convergence_is_monotone_and_tracks_closed_form_600s(self):
        state = ThermalState(temperature_C=25.0, ambient_C=25.0, heater_power_W=10.0,
                             loss_coeff_W_per_K=0.5, heat_capacity_J_per_K=20.0)
        dt = 0.01
        previous = state.temperature_C
        worst = 0.0
        for step in range(1, 60001):
            state = thermal_step(state, dt)
            assert state.temperature_C >= previous
            assert state.temperature_C <= 45.0 + 1e-9
            previous = state.temperature_C
            if step % 500 == 0:
                expected = closed_form_temperature(step * dt, 25.0, 10.0, 0.5, 20.0)
                worst = max(worst, abs(state.temperature_C - expected))
        assert worst <= 0.05

    def test_validation(self):
        with pytest.raises(ValidationError):
            thermal_step(ThermalState(), 0.0)
        with pytest.raises(ValidationError):
            thermal_step(ThermalState(), -0.5)
        with pytest.raises(ValidationError):
            thermal_step(ThermalState(), 1.5)
        with pytest.raises(ValidationError):
            ThermalState(temperature_C=float("nan"))
        with pytest.raises(ValidationError):
            ThermalState(heat_capacity_J_per_K=0.0)
        with pytest.raises(ValidationError):
            ThermalState(temperature_C=-300.0)

    def test_quantization_grid(self):
        assert quantize_temperature(25.0) == 25.0
        assert quantize_temperature(25.03) == 25.0
        assert quantize_temperature(25.04) == 25.0625
        # every reading sits on the 1/16 grid
        for raw in (25.0, 30.17, 44.99, -3.21):
            assert (quantize_temperature(raw) * 16) == int(quantize_temperature(raw) * 16)


class TestMotor:
    def test_at_target_stays_put(self):
        state = MotorState(position_steps=100, target_steps=100)
        assert motor_step(state, 0.1).position_steps == 100

    def test_kinematics_oracle(self):
        # min(target gap, round(speed * dt)) = min(100, 50) = 50
        state = MotorState(position_steps=0, target_steps=100, speed_steps_per_s=500.0)
        assert motor_step(state, 0.1).position_steps == 50

    def test_clamp_at_travel_limit(self):
        state = MotorState(position_steps=3990, target_steps=5000, max_steps=4000,
                           speed_steps_per_s=500.0)
        moved = motor_step(state, 0.1)
        assert moved.position_steps == 4000
        assert moved.endstop_high is True

    def test_reverse_motion(self):
        state = MotorState(position_steps=200, target_steps=0, speed_steps_per_s=500.0)
        assert motor_step(state, 0.1).position_steps == 150

    @given(st.integers(min_value=0, max_value=4000),
           st.integers(min_value=0, max_value=4000),
           st.integers(min_value=1, max_value=20))
    def test_position_never_leaves_travel(self, position, target, n_steps):
        state = MotorState(position_steps=position, target_steps=target)
        for _ in range(n_steps):
            state = motor_step(state, 0.05)
            assert 0 <= state.position_steps <= state.max_steps

    def test_composition_without_clamp_or_arrival(self):
        # speed * dt integral; far from target and travel limits
        state = MotorState(position_steps=500, target_steps=3500, speed_steps_per_s=500.0)
        many = state
        for _ in range(4):
            many = motor_step(many, 0.1)
        once = motor_step(state, 0.4)
        assert many.position_steps == once.position_steps == 700

    def test_endstop_and_ir_flags_pure_in_position(self):
        for pos in range(0, 201):
            state = MotorState(position_steps=pos, target_steps=pos, max_steps=200,
                               ir_sensor_centers=(50, 100, 150), ir_window_steps=10)
            assert state.endstop_low == (pos == 0)
            assert state.endstop_high == (pos == 200)
            for k, center in enumerate((50, 100, 150)):
                assert state.ir_sensor(k) == (abs(pos - center) <= 10)

    def test_validation(self):
        with pytest.raises(ValidationError):
            motor_step(MotorState(), 0.0)
        with pytest.raises(ValidationError):
            MotorState(position_steps=-1)
        with pytest.raises(ValidationError):
            MotorState(position_steps=5000)
        with pytest.raises(ValidationError):
            MotorState(ir_sensor_centers=(1, 2))


class TestLightReading:
    def test_no_leds_lit(self):
        assert light_reading([False, False, False], 100.0, 20.0) == 100.0

    def test_all_leds_lit(self):
        assert light_reading([True, True, True], 100.0, 20.0) == 160.0

    def test_single_led_no_ambient(self):
        assert light_reading([True, False, False], 0.0, 20.0) == 20.0

    def test_linear_over_all_combinations(self):
        for mask in range(8):
            leds = [bool(mask & (1 << i)) for i in range(3)]
            expected = 100.0 + 20.0 * sum(leds)
            assert light_reading(leds, 100.0, 20.0) == expected

    def test_monotone_in_led_count(self):
        readings = [light_reading([True] * n + [False] * (3 - n), 50.0, 5.0)
                    for n in range(4)]
        assert readings == sorted(readings)

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValidationError):
            light_reading([True], -1.0, 20.0)
        with pytest.raises(ValidationError):
            light_reading([True], 1.0, -20.0)


class TestSevenSegment:
    def test_digit_8_lights_everything(self):
        assert render_seven_segment(88) == (0x7F, 0x7F)

    def test_standard_gfedcba_encoding(self):
        # cross-checked digit-by-digit against the classic segment table
        assert render_seven_segment(42) == (0x66, 0x5B)
        assert render_seven_segment(10) == (0x06, 0x3F)

    def test_leading_zero_for_small_values(self):
        tens, units = render_seven_segment(7)
        assert tens == 0x3F  # '0'
        assert units == 0x07

    def test_out_of_range(self):
        for bad in (100, -1, 1000):
            with pytest.raises(RangeError):
                render_seven_segment(bad)

    def test_single_digit_masks_are_injective(self):
        masks = {render_seven_segment(d)[1] for d in range(10)}
        assert len(masks) == 10

    def test_masks_use_low_seven_bits_only(self):
        for value in range(100):
            tens, units = render_seven_segment(value)
            assert tens & ~0x7F == 0
            assert units & ~0x7F == 0


class TestDeviceWrappers:
    def test_heater_loop_steps_toward_equilibrium(self):
        loop = HeaterLoop("heater")
        loop.on = True
        for _ in range(100):
            loop.step(0.01)
        assert loop.thermal.temperature_C > 25.0
        assert loop.temperature == quantize_temperature(loop.thermal.temperature_C)

    def test_light_sensor_tracks_leds(self):
        leds = [Led(f"led{i}") for i in range(1, 4)]
        sensor = LightSensor("light", leds)
        assert sensor.lux == 100.0
        leds[0].on = True
        leds[2].on = True
        assert sensor.lux == 140.0

    def test_display_write_clamps(self):
        display = SevenSegmentDisplay("display")
        display.value = 142.7
        assert display.value == 99.0
        display.value = -3.0
        assert display.value == 0.0
        display.value = 37.2
        assert display.masks == render_seven_segment(37)

    def test_epaper_buffer(self):
        epaper = EPaper("epaper")
        epaper.show("K4I{hello}")
        assert epaper.text == "K4I{hello}"
        epaper.show("x" * 200)
        assert len(epaper.text) == 64

    def test_motor_target_setter_clamps(self):
        motor = LinearMotor("motor")
        motor.target = 9999.0
        assert motor.motor.target_steps == 4000
        motor.target = -5.0
        assert motor.motor.target_steps == 0

    def test_rack_bindings(self):
        rack = DeviceRack()
        rack.add(Button("button1"))
        rack.add(Led("led1"))
        assert rack.read("button1.pressed") is False
        rack.write("led1.on", True)
        assert rack.read("led1.on") is True
        assert rack.field_info("button1.pressed").stimulus is True
        assert rack.field_info("led1.on").stimulus is False
        with pytest.raises(ValidationError):
            rack.read("nosuch.field")
        with pytest.raises(ValidationError):
            rack.add(Led("led1"))
