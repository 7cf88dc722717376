from .feedback import decode_syndrome, feedback_branch, parity_correct, syndrome_of
from .fsm import FsmState, SchedulerState, step_fsm
from .isa import (Branch, Halt, Measure, ParityCorrect, Power, Program, Pulse, Recal,
                  SyncWait, format_instruction, parse_program)
from .sync import SyncStatus, check_sync, drifted_counters, monitor_sync
from .timeline import (ClockDomain, ClockTree, ExecutionTrace, FeedbackConfig, TriggerEvent,
                       compile_timeline, run_program, timeline_to_csv)
