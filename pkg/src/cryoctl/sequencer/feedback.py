"""Measurement feedback: conditional branches and repetition-code correction."""

from __future__ import annotations

from typing import Sequence

from ..errors import ProtocolError
from .isa import Branch, Program, Pulse

REGISTER_BITS = 16

# syndrome (q0^q1, q1^q2) -> index of the flipped data qubit
_DECODE = {
    (0, 0): None,
    (1, 0): 0,
    (1, 1): 1,
    (0, 1): 2,
}


def feedback_branch(measured_bits: int, instruction: Branch, program: Program, pc: int,
                    n_bits: int = REGISTER_BITS) -> int:
    """Next program counter after a BRANCH given the measurement register."""
    if not 0 <= instruction.bit_index < n_bits:
        raise ProtocolError(
            f"branch bit index {instruction.bit_index} outside the {n_bits}-bit measurement register")
    if (measured_bits >> instruction.bit_index) & 1:
        return program.labels[instruction.target_label]
    return pc + 1


def syndrome_of(data_bits: Sequence[int]) -> tuple[int, int]:
    q0, q1, q2 = (int(b) & 1 for b in data_bits)
    return q0 ^ q1, q1 ^ q2


def decode_syndrome(syndrome: Sequence[int]) -> int | None:
    """Data qubit to flip for a syndrome, or ``None``."""
    key = tuple(int(s) for s in syndrome)
    if key not in _DECODE:
        raise ProtocolError(f"syndrome must be two bits, got {syndrome!r}")
    return _DECODE[key]


def parity_correct(syndrome: Sequence[int], channels: Sequence[int] = (0, 1, 2),
                   at_cycle: int = 0, len_cycles: int = 20,
                   wave_id: str = "x180") -> list[Pulse]:
    """Corrective pulses for a 3-qubit bit-flip repetition code.

    ``channels`` maps data qubits q0, q1, q2 to AWG channels.
    """
    flip = decode_syndrome(syndrome)
    if flip is None:
        return []
    return [Pulse(channels[flip], wave_id, 1.0, 0.0, at_cycle, len_cycles)]
