"""Frequency-division channel planning and adjacent-channel leakage."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityExceededError, ConfigError

CROSS_RESONANCE_WARNING = (
    "FDMA control may be inefficient for cross-resonance gate schemes; "
    "evaluate against a 1:1 qubit-to-channel ratio")

_REL_EPS = 1e-9


@dataclass(frozen=True)
class Band:
    f_lo_hz: float
    f_hi_hz: float

    def __post_init__(self):
        if not self.f_hi_hz > self.f_lo_hz:
            raise ConfigError(f"band upper edge {self.f_hi_hz} must exceed lower edge {self.f_lo_hz}", "fdma")

    @property
    def span_hz(self) -> float:
        return self.f_hi_hz - self.f_lo_hz


@dataclass(frozen=True)
class ChannelPlan:
    band: Band
    channel_bw_hz: float
    guard_hz: float
    centers_hz: tuple

    def validate(self) -> None:
        tol = _REL_EPS * self.band.span_hz
        half = self.channel_bw_hz / 2
        for c in self.centers_hz:
            if c - half < self.band.f_lo_hz - tol or c + half > self.band.f_hi_hz + tol:
                raise ConfigError(f"channel at {c} Hz leaves the band", "fdma")
        cs = sorted(self.centers_hz)
        for a, b in zip(cs, cs[1:]):
            if b - a < self.channel_bw_hz + self.guard_hz - tol:
                raise ConfigError(f"channels at {a} and {b} Hz violate spacing", "fdma")

    @property
    def assignments(self) -> dict[int, float]:
        return dict(enumerate(self.centers_hz))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["qubit", "center_hz", "bw_hz"])
        for q, c in enumerate(self.centers_hz):
            w.writerow([q, repr(float(c)), repr(float(self.channel_bw_hz))])
        return buf.getvalue()


def _check(band: Band, channel_bw_hz: float, guard_hz: float):
    if not channel_bw_hz > 0:
        raise ConfigError("channel bandwidth must be positive", "fdma")
    if guard_hz < 0:
        raise ConfigError("guard band must be non-negative", "fdma")


def capacity(band: Band, channel_bw_hz: float, guard_hz: float) -> int:
    """Largest n with n*bw + (n-1)*guard <= span."""
    _check(band, channel_bw_hz, guard_hz)
    span = band.span_hz
    if channel_bw_hz > span * (1 + _REL_EPS):
        return 0
    n = math.floor((span + guard_hz) / (channel_bw_hz + guard_hz) * (1 + _REL_EPS))
    while n > 0 and n * channel_bw_hz + (n - 1) * guard_hz > span * (1 + _REL_EPS):
        n -= 1
    return n


def allocate(n_qubits: int, band: Band, channel_bw_hz: float, guard_hz: float) -> ChannelPlan:
    """Pack channels upward from the band's lower edge."""
    if n_qubits < 1:
        raise ConfigError("need at least one qubit", "fdma")
    cap = capacity(band, channel_bw_hz, guard_hz)
    if n_qubits > cap:
        raise CapacityExceededError(n_qubits, cap)
    pitch = channel_bw_hz + guard_hz
    centers = tuple(band.f_lo_hz + channel_bw_hz / 2 + i * pitch for i in range(n_qubits))
    plan = ChannelPlan(band, channel_bw_hz, guard_hz, centers)
    plan.validate()
    return plan


def leakage_db(delta_f_hz: float, channel_bw_hz: float, rolloff_exponent: float = 2.0) -> float:
    if not rolloff_exponent > 0:
        raise ConfigError("rolloff exponent must be positive", "fdma")
    d = abs(delta_f_hz)
    if math.isinf(d):
        return -math.inf
    if d <= channel_bw_hz / 2:
        return 0.0
    return min(0.0, -10.0 * rolloff_exponent * math.log10(d / (channel_bw_hz / 2)))


def crosstalk_db(plan: ChannelPlan, rolloff_exponent: float = 2.0) -> np.ndarray:
    c = plan.centers_hz
    n = len(c)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = leakage_db(c[j] - c[i], plan.channel_bw_hz, rolloff_exponent)
    return out
