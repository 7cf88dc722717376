"""Per-block power accounting under clock and power gating.

Activity windows come from the sequencer's trigger timeline: a block is
active between its start/stop (or measure_begin/measure_end, or
power_on/power_off) triggers, widened by a pre-wake margin.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError

CAVEATS = (
    "supply noise at power-ON and its effect on gate fidelity is not modeled",
    "electromigration relief is reported only as total ON time per block",
)

_OPEN = {"start": "stop", "measure_begin": "measure_end", "power_on": "power_off"}
_CLOSE = {v: k for k, v in _OPEN.items()}


class GatingMode(enum.Enum):
    NONE = "None"
    CLOCK_GATED = "ClockGated"
    POWER_GATED = "PowerGated"


@dataclass(frozen=True)
class BlockPower:
    name: str
    p_leak_w: float
    p_dyn_w: float
    wake_latency_cycles: int = 0
    wake_energy_j: float = 0.0
    shared: bool = False

    def __post_init__(self):
        if min(self.p_leak_w, self.p_dyn_w, self.wake_energy_j) < 0:
            raise ConfigError(f"block {self.name!r}: powers and wake energy must be >= 0", "power")
        if self.wake_latency_cycles < 0:
            raise ConfigError(f"block {self.name!r}: wake latency must be >= 0", "power")

    @property
    def full_power_w(self) -> float:
        return self.p_leak_w + self.p_dyn_w


@dataclass(frozen=True)
class ActivityWindow:
    block: str
    intervals: tuple = ()
    mode: GatingMode = GatingMode.NONE

    def __post_init__(self):
        ivs = tuple((int(a), int(b)) for a, b in self.intervals)
        prev_end = None
        for a, b in ivs:
            if not 0 <= a < b:
                raise ConfigError(f"{self.block}: interval [{a}, {b}) is empty or negative", "power")
            if prev_end is not None and a < prev_end:
                raise ConfigError(f"{self.block}: intervals must be sorted and disjoint", "power")
            prev_end = b
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "mode", GatingMode(self.mode))

    @property
    def active_cycles(self) -> int:
        return sum(b - a for a, b in self.intervals)

    @property
    def wake_count(self) -> int:
        return len(self.intervals)

    def duty(self, frame_cycles: int) -> float:
        return self.active_cycles / frame_cycles


@dataclass(frozen=True)
class GatingPolicy:
    mode: GatingMode = GatingMode.NONE
    margin_cycles: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", GatingMode(self.mode))
        if self.margin_cycles < 0:
            raise ConfigError("pre-wake margin must be >= 0", "power")


def average_power(block: BlockPower, activity: ActivityWindow, frame_cycles: int,
                  system_clock_hz: float) -> float:
    if frame_cycles <= 0:
        raise ConfigError("frame_cycles must be positive", "power")
    if activity.intervals and activity.intervals[-1][1] > frame_cycles:
        raise ConfigError(f"{activity.block}: activity extends past the frame", "power")
    duty = activity.duty(frame_cycles)
    if activity.mode is GatingMode.NONE:
        return block.p_leak_w + block.p_dyn_w
    if activity.mode is GatingMode.CLOCK_GATED:
        return block.p_leak_w + block.p_dyn_w * duty
    frame_s = frame_cycles / system_clock_hz
    return block.full_power_w * duty + block.wake_energy_j * activity.wake_count / frame_s


def merge_intervals(intervals: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    out: list[list[int]] = []
    for a, b in sorted(intervals):
        if b <= a:
            continue
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def block_spans(timeline: Sequence, block: str) -> list[tuple[int, int]]:
    """Union of the spans during which ``block`` has an open trigger pair."""
    depth = {k: 0 for k in _OPEN}
    opened_at = None
    spans = []
    for ev in timeline:
        if ev.target_block != block:
            continue
        if ev.kind in _OPEN:
            if sum(depth.values()) == 0:
                opened_at = ev.cycle
            depth[ev.kind] += 1
        elif ev.kind in _CLOSE:
            key = _CLOSE[ev.kind]
            if depth[key] == 0:
                raise ConfigError(f"{block}: {ev.kind} at cycle {ev.cycle} without a matching open", "power")
            depth[key] -= 1
            if sum(depth.values()) == 0:
                spans.append((opened_at, ev.cycle))
    if sum(depth.values()):
        raise ConfigError(f"{block}: trigger spans left open at end of timeline", "power")
    return merge_intervals(spans)


def schedule_gating(timeline: Sequence, policy: Mapping[str, GatingPolicy],
                    blocks: Mapping[str, BlockPower], frame_cycles: int) -> dict[str, ActivityWindow]:
    """Activity windows for every block in ``blocks``."""
    out = {}
    for name, block in blocks.items():
        pol = policy.get(name, GatingPolicy())
        if pol.mode is not GatingMode.NONE and pol.margin_cycles < block.wake_latency_cycles:
            raise ConfigError(
                f"{name}: pre-wake margin {pol.margin_cycles} < wake latency {block.wake_latency_cycles}",
                "power")
        spans = [(max(0, a - pol.margin_cycles), min(b, frame_cycles))
                 for a, b in block_spans(timeline, name)]
        out[name] = ActivityWindow(name, tuple(merge_intervals(spans)), pol.mode)
    return out


@dataclass(frozen=True)
class BlockReport:
    name: str
    mode: str
    duty: float
    avg_w: float
    energy_j: float
    on_time_s: float
    shared: bool


@dataclass(frozen=True)
class PowerReport:
    blocks: tuple
    frame_cycles: int
    system_clock_hz: float
    multiplex_ratio: int = 1
    assumptions: tuple = ()
    caveats: tuple = CAVEATS

    @property
    def total_w(self) -> float:
        return sum(b.avg_w for b in self.blocks)

    @property
    def energy_j(self) -> float:
        return sum(b.energy_j for b in self.blocks)

    @property
    def frame_s(self) -> float:
        return self.frame_cycles / self.system_clock_hz

    @property
    def per_qubit_w(self) -> float:
        return per_qubit_budget(self, self.multiplex_ratio)

    def to_dict(self) -> dict:
        return {
            "frame_cycles": self.frame_cycles,
            "frame_s": self.frame_s,
            "total_w": self.total_w,
            "energy_j": self.energy_j,
            "multiplex_ratio": self.multiplex_ratio,
            "per_qubit_w": self.per_qubit_w,
            "blocks": [
                {"name": b.name, "mode": b.mode, "duty": b.duty, "avg_w": b.avg_w,
                 "energy_j": b.energy_j, "on_time_s": b.on_time_s, "shared": b.shared}
                for b in self.blocks
            ],
            "assumptions": list(self.assumptions),
            "caveats": list(self.caveats),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "mode", "duty", "avg_w", "energy_j", "on_time_s", "shared"])
        for b in self.blocks:
            w.writerow([b.name, b.mode, repr(b.duty), repr(b.avg_w), repr(b.energy_j),
                        repr(b.on_time_s), int(b.shared)])
        return buf.getvalue()


def power_report(blocks: Mapping[str, BlockPower], windows: Mapping[str, ActivityWindow],
                 frame_cycles: int, system_clock_hz: float, multiplex_ratio: int = 1,
                 assumptions: Sequence[str] = ()) -> PowerReport:
    frame_s = frame_cycles / system_clock_hz
    rows = []
    for name, block in blocks.items():
        act = windows.get(name, ActivityWindow(name))
        avg = average_power(block, act, frame_cycles, system_clock_hz)
        duty = act.duty(frame_cycles)
        on_cycles = frame_cycles if act.mode is GatingMode.NONE else act.active_cycles
        rows.append(BlockReport(name, act.mode.value, duty, avg, avg * frame_s,
                                on_cycles / system_clock_hz, block.shared))
    return PowerReport(tuple(rows), frame_cycles, system_clock_hz, multiplex_ratio, tuple(assumptions))


def per_qubit_budget(report: PowerReport, multiplex_ratio: int) -> float:
    """Shared-block power split over ``multiplex_ratio`` qubits plus dedicated power."""
    if int(multiplex_ratio) != multiplex_ratio or multiplex_ratio < 1:
        raise ConfigError(f"multiplex ratio must be an integer >= 1, got {multiplex_ratio}", "power")
    shared = sum(b.avg_w for b in report.blocks if b.shared)
    dedicated = sum(b.avg_w for b in report.blocks if not b.shared)
    return shared / multiplex_ratio + dedicated
