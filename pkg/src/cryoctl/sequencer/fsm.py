"""Scheduler finite state machine."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from ..errors import ProtocolError


class FsmState(enum.Enum):
    IDLE = "Idle"
    ARMED = "Armed"
    EXECUTING = "Executing"
    MEASURING = "Measuring"
    CORRECTING = "Correcting"
    HALTED = "Halted"


# Scheduler-level events. Trigger kinds double as events; "correct" fires when a
# BRANCH/PARITY_CORRECT decision is taken on a measurement result and "resume"
# when the corrective section has been issued.
EVENTS = ("sync", "start", "stop", "power_on", "power_off",
          "measure_begin", "measure_end", "correct", "resume", "halt")

_ACTIVITY = ("start", "stop", "power_on", "power_off", "sync")

S = FsmState
EDGES = {
    (S.IDLE, "sync"): S.ARMED,
    (S.ARMED, "sync"): S.ARMED,
    (S.ARMED, "start"): S.EXECUTING,
    (S.ARMED, "power_on"): S.ARMED,
    (S.ARMED, "power_off"): S.ARMED,
    (S.ARMED, "measure_begin"): S.MEASURING,
    (S.EXECUTING, "measure_begin"): S.MEASURING,
    (S.MEASURING, "measure_end"): S.EXECUTING,
    (S.MEASURING, "correct"): S.CORRECTING,
    (S.CORRECTING, "resume"): S.EXECUTING,
}
for _state in (S.EXECUTING, S.MEASURING, S.CORRECTING):
    for _ev in _ACTIVITY:
        EDGES[(_state, _ev)] = _state
for _state in S:
    if _state is not S.HALTED:
        EDGES[(_state, "halt")] = S.HALTED
del _state, _ev


@dataclass(frozen=True)
class SchedulerState:
    fsm: FsmState = FsmState.IDLE
    cycle_counter: int = 0
    pc: int = 0


def step_fsm(state: SchedulerState, event: str, cycle: int | None = None,
             pc: int | None = None) -> SchedulerState:
    """Advance the scheduler by one event.

    ``cycle`` defaults to the current counter and may not move backwards.
    """
    if event not in EVENTS:
        raise ProtocolError(f"unknown scheduler event {event!r}")
    nxt = EDGES.get((state.fsm, event))
    if nxt is None:
        raise ProtocolError(f"illegal transition: event {event!r} in state {state.fsm.value}")
    cycle = state.cycle_counter if cycle is None else cycle
    if cycle < state.cycle_counter:
        raise ProtocolError(
            f"cycle counter would move backwards ({state.cycle_counter} -> {cycle}) "
            f"on event {event!r} in state {state.fsm.value}")
    return replace(state, fsm=nxt, cycle_counter=cycle, pc=state.pc if pc is None else pc)
