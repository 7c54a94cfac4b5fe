"""The instruction-list control language executed by the virtual PLC.

A program is a flat list of instructions evaluated over a single boolean
accumulator, once per scan:

    LD p          acc := p                 (digital, readable)
    LDN p         acc := not p
    AND p         acc := acc and p
    OR p          acc := acc or p
    NOT           acc := not acc
    ST p          p := acc                 (digital output)
    STN p         p := not acc
    GT p c        acc := p > c             (analog, readable)
    LT p c        acc := p < c
    ADD p c dest  dest := p + c            (analog dest output)
    TON t preset  on-delay timer t: accumulates while acc is true
    LD_TON t      acc := timer t done

Lines are independent, "#" starts a comment, parsing reports 1-based
line/column positions. All direction and type errors are caught at parse
time; execution never fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ProgramParseError
from .points import Direction, PointSpec
from .signals import SignalKind

# opcode -> (takes per-operand spec)
_LOGIC_OPS = ("LD", "LDN", "AND", "OR")
_STORE_OPS = ("ST", "STN")
_COMPARE_OPS = ("GT", "LT")


@dataclass(frozen=True)
class Instruction:
    op: str
    point: str | None = None
    const: float | None = None
    dest: str | None = None
    timer: str | None = None
    preset_ms: int | None = None

    def render(self) -> str:
        if self.op in _LOGIC_OPS or self.op in _STORE_OPS:
            return f"{self.op} {self.point}"
        if self.op == "NOT":
            return "NOT"
        if self.op in _COMPARE_OPS:
            return f"{self.op} {self.point} {_fmt_const(self.const)}"
        if self.op == "ADD":
            return f"ADD {self.point} {_fmt_const(self.const)} {self.dest}"
        if self.op == "TON":
            return f"TON {self.timer} {self.preset_ms}"
        if self.op == "LD_TON":
            return f"LD_TON {self.timer}"
        raise AssertionError(f"unrenderable op {self.op}")


def _fmt_const(value: float) -> str:
    return repr(int(value)) if float(value).is_integer() else repr(value)


@dataclass(frozen=True)
class ControlProgram:
    instructions: tuple[Instruction, ...]
    timers: tuple[str, ...] = ()

    def render(self) -> str:
        return "\n".join(instr.render() for instr in self.instructions) + "\n"


@dataclass(frozen=True)
class TimerState:
    """One TON on-delay timer: elapsed true-time and the done flag."""

    elapsed_ms: int = 0
    done: bool = False


def initial_timers(program: ControlProgram) -> dict[str, TimerState]:
    return {name: TimerState() for name in program.timers}


def parse_program(text: str, points: list[PointSpec]) -> ControlProgram:
    """Parse and validate source against a PLC's point list."""
    by_name = {p.name: p for p in points}
    instructions: list[Instruction] = []
    pending_timer_refs: list[tuple[str, int, int]] = []
    timers: dict[str, int] = {}

    def fail(msg: str, line_no: int, col: int):
        raise ProgramParseError(msg, line_no, col)

    def col_of(line: str, token_index: int, tokens: list[str]) -> int:
        # column of the Nth whitespace-separated token, 1-based
        pos = 0
        for i, tok in enumerate(tokens):
            pos = line.index(tok, pos)
            if i == token_index:
                return pos + 1
            pos += len(tok)
        return 1

    def resolve_point(name: str, line_no: int, col: int, *, want: SignalKind,
                      writable: bool = False) -> str:
        spec = by_name.get(name)
        if spec is None:
            fail(f"unknown point {name!r}", line_no, col)
        if spec.kind is not want:
            fail(f"point {name!r} is {spec.kind.value}, expected {want.value}", line_no, col)
        if writable and spec.direction is not Direction.OUTPUT:
            fail(f"point {name!r} is not an output", line_no, col)
        return name

    def parse_const(tok: str, line_no: int, col: int) -> float:
        try:
            value = float(tok)
        except ValueError:
            fail(f"expected a numeric constant, got {tok!r}", line_no, col)
        if not abs(value) < 1e9:
            fail(f"constant {tok} out of range", line_no, col)
        return value

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0]
        tokens = line.split()
        if not tokens:
            continue
        op = tokens[0]
        argc = len(tokens) - 1

        def need(n: int):
            if argc != n:
                fail(f"{op} takes {n} operand(s), got {argc}", line_no, 1)

        if op in _LOGIC_OPS:
            need(1)
            name = resolve_point(tokens[1], line_no, col_of(line, 1, tokens),
                                 want=SignalKind.DIGITAL)
            instructions.append(Instruction(op, point=name))
        elif op in _STORE_OPS:
            need(1)
            name = resolve_point(tokens[1], line_no, col_of(line, 1, tokens),
                                 want=SignalKind.DIGITAL, writable=True)
            instructions.append(Instruction(op, point=name))
        elif op == "NOT":
            need(0)
            instructions.append(Instruction(op))
        elif op in _COMPARE_OPS:
            need(2)
            name = resolve_point(tokens[1], line_no, col_of(line, 1, tokens),
                                 want=SignalKind.ANALOG)
            const = parse_const(tokens[2], line_no, col_of(line, 2, tokens))
            instructions.append(Instruction(op, point=name, const=const))
        elif op == "ADD":
            need(3)
            src = resolve_point(tokens[1], line_no, col_of(line, 1, tokens),
                                want=SignalKind.ANALOG)
            const = parse_const(tokens[2], line_no, col_of(line, 2, tokens))
            dest = resolve_point(tokens[3], line_no, col_of(line, 3, tokens),
                                 want=SignalKind.ANALOG, writable=True)
            instructions.append(Instruction(op, point=src, const=const, dest=dest))
        elif op == "TON":
            need(2)
            timer = tokens[1]
            if timer in timers:
                fail(f"duplicate timer {timer!r} (declared on line {timers[timer]})",
                     line_no, col_of(line, 1, tokens))
            try:
                preset = int(tokens[2])
            except ValueError:
                preset = 0
            if preset <= 0:
                fail(f"timer preset must be a positive integer of ms, got {tokens[2]!r}",
                     line_no, col_of(line, 2, tokens))
            timers[timer] = line_no
            instructions.append(Instruction(op, timer=timer, preset_ms=preset))
        elif op == "LD_TON":
            need(1)
            timer = tokens[1]
            pending_timer_refs.append((timer, line_no, col_of(line, 1, tokens)))
            instructions.append(Instruction(op, timer=timer))
        else:
            fail(f"unknown mnemonic {op!r}", line_no, 1)

    for timer, line_no, col in pending_timer_refs:
        if timer not in timers:
            fail(f"LD_TON references undeclared timer {timer!r}", line_no, col)

    return ControlProgram(tuple(instructions), tuple(timers))


def execute_program(program: ControlProgram, image: dict[str, bool | float],
                    timers: dict[str, TimerState], dt_ms: int
                    ) -> tuple[dict[str, bool | float], dict[str, TimerState]]:
    """Run one scan's worth of logic over the process image.

    Returns a fresh image and fresh timer states; outputs the program never
    stores to keep their previous values (retentive outputs).
    """
    out = dict(image)
    new_timers = dict(timers)
    acc = False
    for instr in program.instructions:
        op = instr.op
        if op == "LD":
            acc = out[instr.point]
        elif op == "LDN":
            acc = not out[instr.point]
        elif op == "AND":
            acc = acc and out[instr.point]
        elif op == "OR":
            acc = acc or out[instr.point]
        elif op == "NOT":
            acc = not acc
        elif op == "ST":
            out[instr.point] = bool(acc)
        elif op == "STN":
            out[instr.point] = not acc
        elif op == "GT":
            acc = out[instr.point] > instr.const
        elif op == "LT":
            acc = out[instr.point] < instr.const
        elif op == "ADD":
            out[instr.dest] = out[instr.point] + instr.const
        elif op == "TON":
            state = new_timers[instr.timer]
            if acc:
                elapsed = state.elapsed_ms + dt_ms
                new_timers[instr.timer] = TimerState(elapsed, elapsed >= instr.preset_ms)
            else:
                new_timers[instr.timer] = TimerState()
        elif op == "LD_TON":
            acc = new_timers[instr.timer].done
        else:  # pragma: no cover - parse_program never emits others
            raise AssertionError(op)
    return out, new_timers
