"""Clock tree, trigger timeline compilation and the program runner."""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from ..errors import AlignmentError, ConfigError, ProtocolError
from .feedback import REGISTER_BITS, feedback_branch, parity_correct
from .fsm import FsmState, SchedulerState, step_fsm
from .isa import (Branch, Halt, Measure, ParityCorrect, Power, Program, Pulse, Recal,
                  SyncWait)

TRIGGER_KINDS = ("sync", "start", "stop", "power_on", "power_off",
                 "measure_begin", "measure_end")


@dataclass(frozen=True)
class ClockDomain:
    name: str
    ratio: Fraction  # domain frequency / system clock

    def __post_init__(self):
        ratio = Fraction(self.ratio)
        if ratio <= 0:
            raise ConfigError(f"clock domain {self.name!r} needs a positive ratio", "sequencer")
        object.__setattr__(self, "ratio", ratio)


def _default_domains():
    return (ClockDomain("system", Fraction(1)),
            ClockDomain("dac", Fraction(50)),    # 5 GHz
            ClockDomain("adc", Fraction(5)))     # 500 MHz


@dataclass(frozen=True)
class ClockTree:
    system_clock_hz: float = 100e6
    domains: tuple = field(default_factory=_default_domains)
    # block kind (name without channel suffix) -> domain name
    block_domains: Mapping[str, str] = field(
        default_factory=lambda: {"awg": "dac", "adc": "adc", "disc": "system"})
    blocks: tuple = ("awg0", "adc0", "disc0")

    def __post_init__(self):
        if not self.system_clock_hz > 0:
            raise ConfigError("system clock must be positive", "sequencer")
        object.__setattr__(self, "domains", tuple(self.domains))
        object.__setattr__(self, "blocks", tuple(self.blocks))
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate clock domain names", "sequencer")
        for kind, dom in self.block_domains.items():
            if dom not in names:
                raise ConfigError(f"block kind {kind!r} mapped to unknown domain {dom!r}", "sequencer")

    def domain(self, name: str) -> ClockDomain:
        for d in self.domains:
            if d.name == name:
                return d
        raise ConfigError(f"unknown clock domain {name!r}", "sequencer")

    def domain_of(self, block: str) -> ClockDomain:
        kind = re.sub(r"\d+$", "", block)
        if kind not in self.block_domains:
            raise ConfigError(f"block {block!r} has no clock domain", "sequencer")
        return self.domain(self.block_domains[kind])

    def frequency_hz(self, name: str) -> float:
        return float(self.system_clock_hz * self.domain(name).ratio)


@dataclass(frozen=True, order=True)
class TriggerEvent:
    cycle: int
    order: int = field(repr=False)
    target_block: str = field(compare=False)
    kind: str = field(compare=False)


@dataclass(frozen=True)
class FeedbackConfig:
    decode_latency_cycles: int = 4
    correction_wave: str = "x180"
    correction_len_cycles: int = 20
    register_bits: int = REGISTER_BITS
    recal_shots: int = 1000
    max_steps: int = 100_000

    def group_channels(self, group: int) -> tuple[int, int, int]:
        return 3 * group, 3 * group + 1, 3 * group + 2


@dataclass
class ExecutionTrace:
    events: list
    states: list
    measured_bits: int = 0
    feedback_latencies: list = field(default_factory=list)
    corrections: list = field(default_factory=list)
    recal_cycles: list = field(default_factory=list)
    pcs: list = field(default_factory=list)

    def timeline_csv(self) -> str:
        return timeline_to_csv(self.events)


def awg_block(ch):
    return f"awg{ch}"


def referenced_blocks(program: Program, config: FeedbackConfig = FeedbackConfig()) -> list[str]:
    out = []
    for ins in program.instructions:
        if isinstance(ins, Pulse):
            out.append(awg_block(ins.channel))
        elif isinstance(ins, Measure):
            out += [f"adc{ins.channel}", f"disc{ins.channel}"]
        elif isinstance(ins, Power):
            out += list(ins.block_set)
        elif isinstance(ins, ParityCorrect):
            out += [awg_block(c) for c in config.group_channels(ins.qubit_group)]
    return out


class _Runner:
    def __init__(self, program, clock_tree, measure, recal, config, on_pulse=None):
        self.program = program
        self.on_pulse = on_pulse
        self.tree = clock_tree
        self.measure = measure
        self.recal = recal
        self.cfg = config
        self.events = []
        self.state = SchedulerState()
        self.visited = [self.state.fsm]
        self.cursor = 0
        self.bits = 0
        self.pending_end = None
        self.trace = ExecutionTrace([], [])
        blocks = list(dict.fromkeys(list(clock_tree.blocks) + referenced_blocks(program, config)))
        for b in blocks:
            clock_tree.domain_of(b)
        self.blocks = blocks

    def emit(self, cycle, block, kind):
        self.events.append(TriggerEvent(cycle, len(self.events), block, kind))
        self.cursor = max(self.cursor, cycle)

    def fsm(self, event, cycle=None):
        cycle = self.state.cycle_counter if cycle is None else max(cycle, self.state.cycle_counter)
        self.state = step_fsm(self.state, event, cycle)
        if self.visited[-1] is not self.state.fsm:
            self.visited.append(self.state.fsm)

    def check_aligned(self, block, *cycles):
        dom = self.tree.domain_of(block)
        for c in cycles:
            if (c * dom.ratio).denominator != 1:
                raise AlignmentError(
                    f"cycle {c} for block {block!r} is not on the {dom.name!r} domain grid")

    def pulse(self, ins: Pulse):
        block = awg_block(ins.channel)
        self.check_aligned(block, ins.start_cycle, ins.end_cycle)
        self.emit(ins.start_cycle, block, "start")
        self.emit(ins.end_cycle, block, "stop")
        self.fsm("start", ins.start_cycle)
        if self.on_pulse is not None:
            self.on_pulse(ins)

    def settle_measurement(self, taken: bool):
        if self.pending_end is None:
            return None
        end, self.pending_end = self.pending_end, None
        self.fsm("correct" if taken else "measure_end", end)
        return end

    def run(self) -> ExecutionTrace:
        for b in self.blocks:
            self.emit(0, b, "sync")
        self.fsm("sync", 0)
        pc = 0
        steps = 0
        prog = self.program
        while True:
            steps += 1
            if steps > self.cfg.max_steps:
                raise ProtocolError(f"program did not halt within {self.cfg.max_steps} steps")
            ins = prog[pc]
            self.trace.pcs.append(pc)
            if not isinstance(ins, (Branch, ParityCorrect)):
                self.settle_measurement(False)
            nxt = pc + 1
            if isinstance(ins, Pulse):
                self.pulse(ins)
            elif isinstance(ins, Measure):
                for b in (f"adc{ins.channel}", f"disc{ins.channel}"):
                    self.check_aligned(b, ins.start_cycle, ins.end_cycle)
                    self.emit(ins.start_cycle, b, "measure_begin")
                for b in (f"adc{ins.channel}", f"disc{ins.channel}"):
                    self.emit(ins.end_cycle, b, "measure_end")
                self.fsm("measure_begin", ins.start_cycle)
                if not 0 <= ins.bit_index < self.cfg.register_bits:
                    raise ProtocolError(f"measurement bit {ins.bit_index} outside the register")
                bit = int(self.measure(ins, ins.start_cycle)) & 1
                mask = 1 << ins.bit_index
                self.bits = (self.bits & ~mask) | (bit << ins.bit_index)
                self.pending_end = ins.end_cycle
            elif isinstance(ins, Branch):
                nxt = feedback_branch(self.bits, ins, prog, pc, self.cfg.register_bits)
                taken = nxt != pc + 1
                if self.settle_measurement(taken) is not None and taken:
                    self.fsm("resume")
            elif isinstance(ins, ParityCorrect):
                syndrome = ((self.bits >> ins.s0_bit) & 1, (self.bits >> ins.s1_bit) & 1)
                pending = self.pending_end
                base = pending if pending is not None else self.cursor
                fixes = parity_correct(syndrome, self.cfg.group_channels(ins.qubit_group),
                                       base + self.cfg.decode_latency_cycles,
                                       self.cfg.correction_len_cycles, self.cfg.correction_wave)
                self.settle_measurement(bool(fixes))
                for p in fixes:
                    self.pulse(p)
                if fixes:
                    self.trace.corrections.extend(fixes)
                    if pending is not None:
                        self.trace.feedback_latencies.append(fixes[0].start_cycle - pending)
                    if self.state.fsm is FsmState.CORRECTING:
                        self.fsm("resume")
            elif isinstance(ins, Power):
                kind = "power_on" if ins.on else "power_off"
                for b in ins.block_set:
                    self.emit(ins.start_cycle, b, kind)
                self.fsm(kind, ins.start_cycle)
            elif isinstance(ins, SyncWait):
                cycle = self.cursor if ins.start_cycle is None else ins.start_cycle
                for b in self.blocks:
                    self.emit(cycle, b, "sync")
                self.fsm("sync", cycle)
            elif isinstance(ins, Recal):
                self.trace.recal_cycles.append(self.cursor)
                if self.recal is not None:
                    self.recal(ins.shots if ins.shots is not None else self.cfg.recal_shots)
            elif isinstance(ins, Halt):
                self.fsm("halt", self.cursor)
                break
            pc = nxt
            if pc >= len(prog):
                raise ProtocolError("program counter ran past the end without HALT")
        self.trace.events = sorted(self.events)
        self.trace.states = self.visited
        self.trace.measured_bits = self.bits
        return self.trace


def _no_measurement(ins, cycle):
    return 0


def run_program(program: Program, clock_tree: ClockTree = ClockTree(),
                measure: Callable | None = None, recal: Callable | None = None,
                config: FeedbackConfig = FeedbackConfig(),
                on_pulse: Callable | None = None) -> ExecutionTrace:
    """Execute ``program`` against the clock tree.

    ``measure(instruction, cycle)`` supplies each MEASURE result bit
    (default 0, so every branch falls through); ``recal(shots)`` is
    invoked for RECAL and ``on_pulse(pulse)`` for every issued pulse,
    corrections included.
    """
    return _Runner(program, clock_tree, measure or _no_measurement, recal, config,
                   on_pulse).run()


def compile_timeline(program: Program, clock_tree: ClockTree = ClockTree(),
                     config: FeedbackConfig = FeedbackConfig()) -> list[TriggerEvent]:
    """Static trigger timeline with all measurement results at 0."""
    return run_program(program, clock_tree, config=config).events


def timeline_to_csv(events: Sequence[TriggerEvent]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["cycle", "target", "kind"])
    for ev in events:
        writer.writerow([ev.cycle, ev.target_block, ev.kind])
    return buf.getvalue()
