"""Pulse-program instruction set and its line-oriented assembly dialect.

One instruction per line, ``MNEMONIC key=value ...``. ``#`` starts a
comment and ``name:`` defines a label for the next instruction (it may
share the line with that instruction)::

    start:
    PULSE ch=0 wave=x90 amp=0.5 phase=0 at=10 len=40
    MEASURE ch=0 at=60 window=200
    BRANCH bit=0 target=start
    HALT
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from ..errors import ParseError


@dataclass(frozen=True)
class Pulse:
    channel: int
    wave_id: str
    amp_scale: float
    phase_rad: float
    start_cycle: int
    len_cycles: int

    mnemonic = "PULSE"

    def __post_init__(self):
        _check_cycles(self.start_cycle, self.len_cycles)
        if not 0.0 <= self.amp_scale <= 1.0:
            raise ValueError(f"amp must be within [0, 1], got {self.amp_scale}")
        if self.channel < 0:
            raise ValueError("channel must be non-negative")

    @property
    def end_cycle(self):
        return self.start_cycle + self.len_cycles


@dataclass(frozen=True)
class Measure:
    channel: int
    start_cycle: int
    window_cycles: int
    bit: int | None = None

    mnemonic = "MEASURE"

    def __post_init__(self):
        _check_cycles(self.start_cycle, self.window_cycles)
        if self.channel < 0:
            raise ValueError("channel must be non-negative")

    @property
    def bit_index(self):
        return self.channel if self.bit is None else self.bit

    @property
    def end_cycle(self):
        return self.start_cycle + self.window_cycles


@dataclass(frozen=True)
class Branch:
    bit_index: int
    target_label: str

    mnemonic = "BRANCH"

    def __post_init__(self):
        if self.bit_index < 0:
            raise ValueError("bit index must be non-negative")


@dataclass(frozen=True)
class ParityCorrect:
    """Decode a 3-qubit repetition-code syndrome held in two measurement bits."""

    qubit_group: int
    s0_bit: int = 0
    s1_bit: int = 1

    mnemonic = "PARITY_CORRECT"


@dataclass(frozen=True)
class Power:
    block_set: tuple[str, ...]
    on: bool
    start_cycle: int

    mnemonic = "POWER"

    def __post_init__(self):
        _check_cycles(self.start_cycle)
        if not self.block_set:
            raise ValueError("POWER needs at least one block")


@dataclass(frozen=True)
class SyncWait:
    start_cycle: int | None = None

    mnemonic = "SYNC_WAIT"


@dataclass(frozen=True)
class Recal:
    shots: int | None = None

    mnemonic = "RECAL"


@dataclass(frozen=True)
class Halt:
    mnemonic = "HALT"


Instruction = Union[Pulse, Measure, Branch, ParityCorrect, Power, SyncWait, Recal, Halt]


def _check_cycles(*values):
    for v in values:
        if v is not None and v < 0:
            raise ValueError("cycle fields must be >= 0")


@dataclass(frozen=True)
class Program:
    instructions: tuple
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        n = len(self.instructions)
        for name, idx in self.labels.items():
            if not 0 <= idx < n:
                raise ParseError(f"label {name!r} points past the end of the program")
        halts = sum(isinstance(i, Halt) for i in self.instructions)
        if halts != 1:
            raise ParseError(f"program must contain exactly one HALT, found {halts}")
        for ins in self.instructions:
            if isinstance(ins, Branch) and ins.target_label not in self.labels:
                raise ParseError(f"unresolved label {ins.target_label!r}")

    def __len__(self):
        return len(self.instructions)

    def __getitem__(self, idx):
        return self.instructions[idx]

    def to_text(self) -> str:
        by_index = {}
        for name, idx in sorted(self.labels.items()):
            by_index.setdefault(idx, []).append(name)
        lines = []
        for idx, ins in enumerate(self.instructions):
            lines.extend(f"{name}:" for name in by_index.get(idx, []))
            lines.append(format_instruction(ins))
        return "\n".join(lines) + "\n"


_LABEL = re.compile(r"^([A-Za-z_][A-Za-z0-9_.]*):\s*(.*)$")

# mnemonic -> (required keys, optional keys)
_SYNTAX = {
    "PULSE": ({"ch", "wave", "amp", "phase", "at", "len"}, set()),
    "MEASURE": ({"ch", "at", "window"}, {"bit"}),
    "BRANCH": ({"bit", "target"}, set()),
    "PARITY_CORRECT": ({"group"}, {"s0", "s1"}),
    "POWER": ({"blocks", "state", "at"}, set()),
    "SYNC_WAIT": (set(), {"at"}),
    "RECAL": (set(), {"shots"}),
    "HALT": (set(), set()),
}


def _int(value, key, line):
    try:
        return int(value, 0)
    except ValueError:
        raise ParseError(f"malformed operand {key}={value!r}: expected integer", line) from None


def _float(value, key, line):
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"malformed operand {key}={value!r}: expected number", line) from None


def _build(mnemonic, ops, line):
    if mnemonic == "PULSE":
        return Pulse(_int(ops["ch"], "ch", line), ops["wave"], _float(ops["amp"], "amp", line),
                     _float(ops["phase"], "phase", line), _int(ops["at"], "at", line),
                     _int(ops["len"], "len", line))
    if mnemonic == "MEASURE":
        bit = _int(ops["bit"], "bit", line) if "bit" in ops else None
        return Measure(_int(ops["ch"], "ch", line), _int(ops["at"], "at", line),
                       _int(ops["window"], "window", line), bit)
    if mnemonic == "BRANCH":
        return Branch(_int(ops["bit"], "bit", line), ops["target"])
    if mnemonic == "PARITY_CORRECT":
        return ParityCorrect(_int(ops["group"], "group", line),
                             _int(ops.get("s0", "0"), "s0", line),
                             _int(ops.get("s1", "1"), "s1", line))
    if mnemonic == "POWER":
        state = ops["state"].lower()
        if state not in ("on", "off"):
            raise ParseError(f"malformed operand state={ops['state']!r}: expected on|off", line)
        blocks = tuple(b for b in ops["blocks"].split(",") if b)
        return Power(blocks, state == "on", _int(ops["at"], "at", line))
    if mnemonic == "SYNC_WAIT":
        return SyncWait(_int(ops["at"], "at", line) if "at" in ops else None)
    if mnemonic == "RECAL":
        return Recal(_int(ops["shots"], "shots", line) if "shots" in ops else None)
    return Halt()


def parse_program(text: str) -> Program:
    """Assemble program text; raises :class:`ParseError` naming the line."""
    instructions = []
    labels = {}
    label_lines = {}
    branch_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        while (m := _LABEL.match(line)) is not None:
            name = m.group(1)
            if name in labels:
                raise ParseError(f"duplicate label {name!r}", lineno)
            labels[name] = len(instructions)
            label_lines[name] = lineno
            line = m.group(2).strip()
        if not line:
            continue
        mnemonic, *tokens = line.split()
        mnemonic = mnemonic.upper()
        if mnemonic not in _SYNTAX:
            raise ParseError(f"unknown mnemonic {mnemonic!r}", lineno)
        ops = {}
        for tok in tokens:
            key, sep, value = tok.partition("=")
            if not sep or not key or not value:
                raise ParseError(f"malformed operand {tok!r}", lineno)
            if key in ops:
                raise ParseError(f"duplicate operand {key!r}", lineno)
            ops[key] = value
        required, optional = _SYNTAX[mnemonic]
        missing = required - ops.keys()
        if missing:
            raise ParseError(f"malformed operand list: missing {', '.join(sorted(missing))}", lineno)
        extra = ops.keys() - required - optional
        if extra:
            raise ParseError(f"malformed operand list: unknown {', '.join(sorted(extra))}", lineno)
        try:
            ins = _build(mnemonic, ops, lineno)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed operand: {exc}", lineno) from None
        if isinstance(ins, Branch):
            branch_lines.append((ins.target_label, lineno))
        instructions.append(ins)
    for target, lineno in branch_lines:
        if target not in labels:
            raise ParseError(f"unresolved label {target!r}", lineno)
    for name, idx in labels.items():
        if idx >= len(instructions):
            raise ParseError(f"label {name!r} has no instruction", label_lines[name])
    return Program(tuple(instructions), labels)


def format_instruction(ins) -> str:
    if isinstance(ins, Pulse):
        return (f"PULSE ch={ins.channel} wave={ins.wave_id} amp={ins.amp_scale!r} "
                f"phase={ins.phase_rad!r} at={ins.start_cycle} len={ins.len_cycles}")
    if isinstance(ins, Measure):
        bit = "" if ins.bit is None else f" bit={ins.bit}"
        return f"MEASURE ch={ins.channel} at={ins.start_cycle} window={ins.window_cycles}{bit}"
    if isinstance(ins, Branch):
        return f"BRANCH bit={ins.bit_index} target={ins.target_label}"
    if isinstance(ins, ParityCorrect):
        return f"PARITY_CORRECT group={ins.qubit_group} s0={ins.s0_bit} s1={ins.s1_bit}"
    if isinstance(ins, Power):
        return f"POWER blocks={','.join(ins.block_set)} state={'on' if ins.on else 'off'} at={ins.start_cycle}"
    if isinstance(ins, SyncWait):
        return "SYNC_WAIT" if ins.start_cycle is None else f"SYNC_WAIT at={ins.start_cycle}"
    if isinstance(ins, Recal):
        return "RECAL" if ins.shots is None else f"RECAL shots={ins.shots}"
    return "HALT"
