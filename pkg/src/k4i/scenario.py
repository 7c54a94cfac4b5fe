"""Scenario files: the declarative description of a testbed.

A scenario is JSON with schema "k4i-scenario/1": a clock, one network
policy, a list of panels (each one master PLC plus slaves), optional
scripted stimuli (operator actions on a timeline) and injects (attacker
frames on a timeline). Panels and slave lists may be given as templates
with a "count" so large classroom or scale scenarios stay readable.

Validation is total: load_scenario collects every problem it can find and
reports them all at once, each with a path into the document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .devices import (
    Button,
    DeviceRack,
    EPaper,
    HeaterLoop,
    KeySwitch,
    Led,
    LightSensor,
    LinearMotor,
    MotionDetector,
    MotorState,
    SevenSegmentDisplay,
    ThermalState,
)
from .errors import ProgramParseError, ValidationError
from .netsim import LinkPolicy
from .points import Direction, PointSpec
from .program import ControlProgram, parse_program
from .signals import SignalKind

SCENARIO_SCHEMA = "k4i-scenario/1"
DEFAULT_BRIDGE_BASE_PORT = 15020

FORM_FACTORS = ("tabletop", "trolley")


@dataclass
class DeviceInventory:
    """What is physically wired to one PLC's I/O modules."""

    leds: int = 0
    buttons: int = 0
    key_switch: bool = False
    motion_detectors: int = 0
    motor: dict | None = None
    heater: dict | None = None
    thermometer: bool = False
    light_sensor: dict | None = None
    seven_segment: bool = False
    epaper: bool = False


@dataclass
class PlcDef:
    plc_id: str
    role: str  # "master" | "slave"
    model_label: str
    scan_ms: int
    program_text: str
    inventory: DeviceInventory


@dataclass
class PanelDef:
    panel_id: str
    index: int  # 1-based, used in telemetry topics
    form_factor: str
    master: PlcDef
    slaves: list[PlcDef]

    @property
    def plcs(self) -> list[PlcDef]:
        return [self.master] + self.slaves


@dataclass
class ScenarioConfig:
    name: str
    tick_ms: int
    mode: str  # "fast" | "realtime"
    link_policy: LinkPolicy
    attacker_enabled: bool
    bridge_enabled: bool
    bridge_base_port: int
    panels: list[PanelDef]
    stimuli: list[dict] = field(default_factory=list)
    injects: list[dict] = field(default_factory=list)

    def panel(self, ref: str) -> PanelDef:
        """Look up by id ('panel-1') or bare index ('1')."""
        for panel in self.panels:
            if panel.panel_id == ref or str(panel.index) == str(ref):
                return panel
        raise KeyError(ref)

    def plc_count(self) -> int:
        return sum(len(panel.plcs) for panel in self.panels)


# ---------------------------------------------------------------------------
# Device rack / point derivation
# ---------------------------------------------------------------------------

def build_rack(inventory: DeviceInventory) -> tuple[DeviceRack, list[PointSpec]]:
    """Materialize devices and their canonical point list for one PLC."""
    rack = DeviceRack()
    points: list[PointSpec] = []
    leds = []
    for n in range(1, inventory.leds + 1):
        led = rack.add(Led(f"led{n}"))
        leds.append(led)
        points.append(PointSpec(f"led{n}", Direction.OUTPUT, SignalKind.DIGITAL,
                                f"led{n}.on"))
    for n in range(1, inventory.buttons + 1):
        rack.add(Button(f"button{n}"))
        points.append(PointSpec(f"button{n}", Direction.INPUT, SignalKind.DIGITAL,
                                f"button{n}.pressed"))
    if inventory.key_switch:
        rack.add(KeySwitch("key_switch"))
        points.append(PointSpec("key_switch", Direction.INPUT, SignalKind.DIGITAL,
                                "key_switch.on"))
    for n in range(1, inventory.motion_detectors + 1):
        rack.add(MotionDetector(f"motion{n}"))
        points.append(PointSpec(f"motion{n}", Direction.INPUT, SignalKind.DIGITAL,
                                f"motion{n}.active"))
    if inventory.heater is not None:
        cfg = inventory.heater
        thermal = ThermalState(
            temperature_C=cfg.get("initial_C", cfg.get("ambient_C", 25.0)),
            ambient_C=cfg.get("ambient_C", 25.0),
            heat_capacity_J_per_K=cfg.get("heat_capacity_J_per_K", 20.0),
            loss_coeff_W_per_K=cfg.get("loss_coeff_W_per_K", 0.5),
        )
        rack.add(HeaterLoop("heater", thermal, rated_power_W=cfg.get("power_W", 10.0)))
        points.append(PointSpec("heater", Direction.OUTPUT, SignalKind.DIGITAL, "heater.on"))
        if inventory.thermometer:
            points.append(PointSpec("temp1", Direction.INPUT, SignalKind.ANALOG,
                                    "heater.temperature", unit="°C"))
    if inventory.light_sensor is not None:
        cfg = inventory.light_sensor
        rack.add(LightSensor("light", leds, ambient_lux=cfg.get("ambient_lux", 100.0),
                             per_led_lux=cfg.get("per_led_lux", 20.0)))
        points.append(PointSpec("light1", Direction.INPUT, SignalKind.ANALOG,
                                "light.lux", unit="lux"))
    if inventory.seven_segment:
        rack.add(SevenSegmentDisplay("display"))
        points.append(PointSpec("display_value", Direction.OUTPUT, SignalKind.ANALOG,
                                "display.value", unit="count"))
    if inventory.epaper:
        rack.add(EPaper("epaper"))
    if inventory.motor is not None:
        cfg = inventory.motor
        motor = MotorState(
            position_steps=cfg.get("initial_steps", 0),
            target_steps=cfg.get("initial_steps", 0),
            speed_steps_per_s=cfg.get("speed_steps_per_s", 500.0),
            max_steps=cfg.get("max_steps", 4000),
            ir_sensor_centers=tuple(cfg.get("ir_centers", (1000, 2000, 3000))),
            ir_window_steps=cfg.get("ir_window_steps", 25),
        )
        rack.add(LinearMotor("motor", motor))
        points.extend([
            PointSpec("motor_position", Direction.INPUT, SignalKind.ANALOG,
                      "motor.position", unit="steps"),
            PointSpec("motor_target", Direction.OUTPUT, SignalKind.ANALOG,
                      "motor.target", unit="steps"),
            PointSpec("endstop_low", Direction.INPUT, SignalKind.DIGITAL,
                      "motor.endstop_low"),
            PointSpec("endstop_high", Direction.INPUT, SignalKind.DIGITAL,
                      "motor.endstop_high"),
            PointSpec("ir1", Direction.INPUT, SignalKind.DIGITAL, "motor.ir1"),
            PointSpec("ir2", Direction.INPUT, SignalKind.DIGITAL, "motor.ir2"),
            PointSpec("ir3", Direction.INPUT, SignalKind.DIGITAL, "motor.ir3"),
        ])
    return rack, points


# ---------------------------------------------------------------------------
# Loading and validation
# ---------------------------------------------------------------------------

class _Collector:
    def __init__(self):
        self.problems: list[tuple[str, str]] = []

    def add(self, path: str, message: str) -> None:
        self.problems.append((path, message))

    def raise_if_any(self) -> None:
        if self.problems:
            raise ValidationError(self.problems)


def _parse_inventory(raw: dict, path: str, problems: _Collector) -> DeviceInventory:
    known = {"leds", "buttons", "key_switch", "motion_detectors", "motor", "heater",
             "thermometer", "light_sensor", "seven_segment", "epaper"}
    for key in raw:
        if key not in known:
            problems.add(f"{path}.{key}", "unknown device kind")

    def as_section(key):
        value = raw.get(key)
        if value is True:
            return {}
        if value in (None, False):
            return None
        return value if isinstance(value, dict) else None

    return DeviceInventory(
        leds=int(raw.get("leds", 0)),
        buttons=int(raw.get("buttons", 0)),
        key_switch=bool(raw.get("key_switch", False)),
        motion_detectors=int(raw.get("motion_detectors", 0)),
        motor=as_section("motor"),
        heater=as_section("heater"),
        thermometer=bool(raw.get("thermometer", False)),
        light_sensor=as_section("light_sensor"),
        seven_segment=bool(raw.get("seven_segment", False)),
        epaper=bool(raw.get("epaper", False)),
    )


def _read_program(raw: dict, base_dir: Path | None, path: str, problems: _Collector) -> str:
    if "program_lines" in raw:
        lines = raw["program_lines"]
        if not isinstance(lines, list):
            problems.add(f"{path}.program_lines", "must be a list of source lines")
            return ""
        return "\n".join(lines) + "\n"
    name = raw.get("program")
    if not name:
        return ""  # a PLC with no program only latches I/O
    candidate = (base_dir / name) if base_dir else Path(name)
    if candidate.is_file():
        return candidate.read_text(encoding="utf-8")
    bundled = resources.files("k4i.data") / name
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    problems.add(f"{path}.program", f"program file {name!r} not found")
    return ""


def _parse_plc(raw: dict, role: str, default_id: str, path: str,
               base_dir: Path | None, problems: _Collector) -> PlcDef:
    plc_id = raw.get("id", default_id)
    default_label = "UniPi Neuron M103" if role == "master" else "UniPi Neuron S103"
    scan_ms = int(raw.get("scan_ms", 50))
    if scan_ms <= 0:
        problems.add(f"{path}.scan_ms", "must be a positive number of ms")
        scan_ms = 50
    inventory = _parse_inventory(raw.get("devices", {}), f"{path}.devices", problems)
    if role != "master" and inventory.motor is not None:
        problems.add(f"{path}.devices.motor", "only the panel master owns the motor")
    program_text = _read_program(raw, base_dir, path, problems)
    return PlcDef(plc_id, role, raw.get("model_label", default_label), scan_ms,
                  program_text, inventory)


def _expand_slaves(raw, path: str, base_dir: Path | None, problems: _Collector) -> list[PlcDef]:
    if isinstance(raw, dict):  # template form: {"count": N, ...}
        count = int(raw.get("count", 0))
        return [_parse_plc(raw.get("template", raw), "slave", f"slave-{n}",
                           f"{path}[{n - 1}]", base_dir, problems)
                for n in range(1, count + 1)]
    slaves = []
    for i, item in enumerate(raw or []):
        slaves.append(_parse_plc(item, "slave", f"slave-{i + 1}", f"{path}[{i}]",
                                 base_dir, problems))
    return slaves


def _expand_panels(raw_panels, base_dir: Path | None, problems: _Collector) -> list[PanelDef]:
    panels: list[PanelDef] = []
    index = 0
    for i, raw in enumerate(raw_panels or []):
        path = f"panels[{i}]"
        form = raw.get("form_factor", "tabletop")
        if form not in FORM_FACTORS:
            problems.add(f"{path}.form_factor", f"must be one of {FORM_FACTORS}")
            form = "tabletop"
        count = int(raw.get("count", 1))
        for _ in range(count):
            index += 1
            panel_id = raw.get("id", f"panel-{index}") if count == 1 else f"panel-{index}"
            master = _parse_plc(raw.get("master", {}), "master", "master",
                                f"{path}.master", base_dir, problems)
            slaves = _expand_slaves(raw.get("slaves"), f"{path}.slaves", base_dir, problems)
            panels.append(PanelDef(panel_id, index, form, master, slaves))
    return panels


def load_scenario(text: str, base_dir: str | Path | None = None) -> ScenarioConfig:
    """Parse and fully validate a scenario document.

    Raises ValidationError carrying every problem found, not just the first.
    """
    problems = _Collector()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValidationError([("", f"not valid JSON: {err}")]) from err
    if not isinstance(raw, dict):
        raise ValidationError([("", "scenario document must be a JSON object")])
    if raw.get("schema") != SCENARIO_SCHEMA:
        problems.add("schema", f"expected {SCENARIO_SCHEMA!r}, got {raw.get('schema')!r}")

    base = Path(base_dir) if base_dir else None
    name = raw.get("name", "unnamed")

    clock = raw.get("clock", {})
    tick_ms = int(clock.get("tick_ms", 10))
    if tick_ms <= 0:
        problems.add("clock.tick_ms", "must be a positive number of ms")
        tick_ms = 10
    mode = clock.get("mode", "fast")
    if mode not in ("fast", "realtime"):
        problems.add("clock.mode", "must be 'fast' or 'realtime'")
        mode = "fast"

    network = raw.get("network", {})
    try:
        link_policy = LinkPolicy(
            latency_ms=float(network.get("latency_ms", 0.0)),
            latency_jitter_ms=float(network.get("latency_jitter_ms", 0.0)),
            drop_probability=float(network.get("drop_probability", 0.0)),
            seed=int(network.get("seed", 0)),
        )
    except ValidationError as err:
        problems.add("network", str(err))
        link_policy = LinkPolicy()
    bridge = network.get("bridge", {})

    panels = _expand_panels(raw.get("panels"), base, problems)
    if not panels:
        problems.add("panels", "at least one panel is required")

    # id uniqueness
    seen_panels: set[str] = set()
    for i, panel in enumerate(panels):
        if panel.panel_id in seen_panels:
            problems.add(f"panels[{i}].id", f"duplicate panel id {panel.panel_id!r}")
        seen_panels.add(panel.panel_id)
        seen_plcs: set[str] = set()
        for plc in panel.plcs:
            if plc.plc_id in seen_plcs:
                problems.add(f"panels[{i}]", f"duplicate PLC id {plc.plc_id!r}")
            seen_plcs.add(plc.plc_id)

    # scan period divisibility
    for i, panel in enumerate(panels):
        for plc in panel.plcs:
            if plc.scan_ms % tick_ms != 0:
                problems.add(f"panels[{i}].{plc.plc_id}.scan_ms",
                             f"scan period {plc.scan_ms} not divisible by tick {tick_ms}")

    # materialize racks once to validate bindings and programs
    point_index: dict[tuple[str, str], dict[str, PointSpec]] = {}
    for i, panel in enumerate(panels):
        for plc in panel.plcs:
            try:
                _, points = build_rack(plc.inventory)
            except ValidationError as err:
                problems.add(f"panels[{i}].{plc.plc_id}.devices", str(err))
                continue
            point_index[(panel.panel_id, plc.plc_id)] = {p.name: p for p in points}
            try:
                parse_program(plc.program_text, points)
            except ProgramParseError as err:
                problems.add(f"panels[{i}].{plc.plc_id}.program", str(err))

    stimuli = list(raw.get("stimuli", []))
    default_panel = panels[0].panel_id if panels else ""
    for i, stim in enumerate(stimuli):
        path = f"stimuli[{i}]"
        panel_ref = stim.setdefault("panel", default_panel)
        key = None
        for (panel_id, plc_id) in point_index:
            if panel_id == panel_ref and plc_id == stim.get("plc"):
                key = (panel_id, plc_id)
        if key is None:
            problems.add(path, f"unknown PLC {panel_ref}/{stim.get('plc')!r}")
            continue
        point = point_index[key].get(stim.get("point", ""))
        if point is None:
            problems.add(f"{path}.point", f"unknown point {stim.get('point')!r}")
        elif point.direction is not Direction.INPUT:
            problems.add(f"{path}.point", f"{point.name!r} is not an input")
        if int(stim.get("t_ms", -1)) < 0:
            problems.add(f"{path}.t_ms", "must be a non-negative time in ms")

    injects = list(raw.get("injects", []))
    attacker_enabled = bool(network.get("attacker", False))
    endpoint_ids = {f"{panel.panel_id}.{plc.plc_id}"
                    for panel in panels for plc in panel.plcs}
    for i, inj in enumerate(injects):
        path = f"injects[{i}]"
        if not attacker_enabled:
            problems.add(path, "injects require network.attacker: true")
        if inj.get("to") not in endpoint_ids:
            problems.add(f"{path}.to", f"unknown endpoint {inj.get('to')!r}")
        try:
            bytes.fromhex(inj.get("payload_hex", ""))
        except ValueError:
            problems.add(f"{path}.payload_hex", "not valid hex")
        if int(inj.get("t_ms", -1)) < 0:
            problems.add(f"{path}.t_ms", "must be a non-negative time in ms")

    problems.raise_if_any()
    return ScenarioConfig(
        name=name,
        tick_ms=tick_ms,
        mode=mode,
        link_policy=link_policy,
        attacker_enabled=attacker_enabled,
        bridge_enabled=bool(bridge.get("enabled", False)),
        bridge_base_port=int(bridge.get("base_port", DEFAULT_BRIDGE_BASE_PORT)),
        panels=panels,
        stimuli=sorted(stimuli, key=lambda s: int(s["t_ms"])),
        injects=sorted(injects, key=lambda s: int(s["t_ms"])),
    )


def bundled_scenario_path(name: str) -> Path | None:
    """Resolve a bundled scenario by file name ('scale-148.json') or stem."""
    if not name.endswith(".json"):
        name += ".json"
    candidate = resources.files("k4i.data") / "scenarios" / name
    if candidate.is_file():
        return Path(str(candidate))
    return None


def load_scenario_file(path: str | Path) -> ScenarioConfig:
    """Load from an explicit path, falling back to the bundled scenarios."""
    p = Path(path)
    if not p.is_file():
        bundled = bundled_scenario_path(p.name)
        if bundled is None:
            raise FileNotFoundError(path)
        p = bundled
    return load_scenario(p.read_text(encoding="utf-8"), base_dir=p.parent)


def bundled_game_path(name: str) -> Path | None:
    if not name.endswith(".json"):
        name += ".json"
    candidate = resources.files("k4i.data") / "games" / name
    if candidate.is_file():
        return Path(str(candidate))
    return None
