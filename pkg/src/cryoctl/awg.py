"""Memory-based arbitrary waveform generation by direct digital synthesis.

Also carries a reference LO-mixer up-conversion path whose only purpose is
to put a number on the phase-noise penalty of the mixer approach.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .signals import IqTrace, RngStream

DEFAULT_DEPTH = 4096


class WaveformMemory:
    """Envelope store keyed by ``wave_id``; samples are bounded to [-1, 1]."""

    def __init__(self, entries=None, depth_limit: int = DEFAULT_DEPTH):
        if depth_limit < 1:
            raise ConfigError("depth_limit must be >= 1", "awg")
        self.depth_limit = depth_limit
        self._entries: dict[str, np.ndarray] = {}
        for wave_id, env in (entries or {}).items():
            self.store(wave_id, env)

    def store(self, wave_id: str, envelope) -> None:
        env = np.asarray(envelope, dtype=float).ravel()
        if env.size > self.depth_limit:
            raise ConfigError(
                f"waveform {wave_id!r} has {env.size} samples, depth limit is {self.depth_limit}", "awg")
        if not np.all(np.isfinite(env)) or np.any(np.abs(env) > 1.0):
            raise ConfigError(f"waveform {wave_id!r} samples must lie in [-1, 1]", "awg")
        env.setflags(write=False)
        self._entries[wave_id] = env

    def __getitem__(self, wave_id: str) -> np.ndarray:
        try:
            return self._entries[wave_id]
        except KeyError:
            raise ConfigError(f"waveform {wave_id!r} not in memory", "awg") from None

    def __contains__(self, wave_id):
        return wave_id in self._entries

    def __iter__(self):
        return iter(sorted(self._entries))

    def __len__(self):
        return len(self._entries)

    @classmethod
    def from_csv(cls, path, depth_limit: int = DEFAULT_DEPTH) -> "WaveformMemory":
        """Load ``wave_id,index,value`` rows."""
        rows: dict[str, dict[int, float]] = {}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                rows.setdefault(row["wave_id"], {})[int(row["index"])] = float(row["value"])
        mem = cls(depth_limit=depth_limit)
        for wave_id, samples in rows.items():
            n = max(samples) + 1
            if sorted(samples) != list(range(n)):
                raise ConfigError(f"waveform {wave_id!r} has gaps in its index column", "awg")
            mem.store(wave_id, [samples[i] for i in range(n)])
        return mem

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["wave_id", "index", "value"])
            for wave_id in self:
                for i, v in enumerate(self._entries[wave_id]):
                    writer.writerow([wave_id, i, repr(float(v))])


@dataclass(frozen=True)
class DdsConfig:
    ftw: int = 0
    acc_width_bits: int = 32
    sample_clock_hz: float = 5e9

    def __post_init__(self):
        if not 8 <= self.acc_width_bits <= 48:
            raise ConfigError("accumulator width must be in 8..48 bits", "awg")
        if not 0 <= self.ftw < 2 ** (self.acc_width_bits - 1):
            raise ConfigError(f"tuning word {self.ftw} must be in [0, 2^(N-1))", "awg")
        if not self.sample_clock_hz > 0:
            raise ConfigError("sample clock must be positive", "awg")

    @property
    def modulus(self) -> int:
        return 1 << self.acc_width_bits

    @property
    def frequency_hz(self) -> float:
        return self.ftw * self.sample_clock_hz / self.modulus

    def tuned(self, f_out_hz: float) -> "DdsConfig":
        return DdsConfig(ftw_for(f_out_hz, self), self.acc_width_bits, self.sample_clock_hz)


@dataclass(frozen=True)
class LoSpec:
    lo_freq_hz: float
    phase_jitter_rms_rad: float = 0.0

    def __post_init__(self):
        if self.phase_jitter_rms_rad < 0:
            raise ConfigError("LO phase jitter must be non-negative", "awg")


def ftw_for(f_out_hz: float, cfg: DdsConfig) -> int:
    if not 0 <= f_out_hz < cfg.sample_clock_hz / 2:
        raise ConfigError(
            f"output frequency {f_out_hz} Hz must be in [0, {cfg.sample_clock_hz / 2} Hz)", "awg")
    ftw = round(f_out_hz / cfg.sample_clock_hz * cfg.modulus)
    return min(ftw, cfg.modulus // 2 - 1)


def phase_accumulator(cfg: DdsConfig, n_samples: int) -> np.ndarray:
    """Accumulator contents ``(k * ftw) mod 2^N`` for k = 0..n-1."""
    k = np.arange(n_samples, dtype=np.uint64)
    # uint64 products wrap mod 2^64, which is a multiple of 2^N
    return (k * np.uint64(cfg.ftw)) & np.uint64(cfg.modulus - 1)


def dds_carrier(cfg: DdsConfig, n_samples: int) -> IqTrace:
    acc = phase_accumulator(cfg, n_samples)
    phase = 2.0 * np.pi * (acc.astype(np.float64) / cfg.modulus)
    return IqTrace(np.exp(1j * phase), cfg.sample_clock_hz)


def play_pulse(memory: WaveformMemory, wave_id: str, cfg: DdsConfig,
               amplitude_v: float, phase_rad: float = 0.0) -> IqTrace:
    """Envelope from memory times the DDS carrier, scaled to ``amplitude_v``."""
    env = memory[wave_id]
    carrier = dds_carrier(cfg, env.size).samples
    return IqTrace(amplitude_v * env * carrier * np.exp(1j * phase_rad), cfg.sample_clock_hz)


def gaussian_envelope(length: int, sigma: float | None = None) -> np.ndarray:
    sigma = length / 8 if sigma is None else sigma
    t = np.arange(length) - (length - 1) / 2
    return np.exp(-0.5 * (t / sigma) ** 2)


def coherent_power(y: np.ndarray, ref: np.ndarray) -> float:
    """Power of the component of ``y`` along ``ref``."""
    ref_energy = np.vdot(ref, ref).real
    return float(abs(np.vdot(ref, y)) ** 2 / ref_energy / ref.size)


def lo_upconvert_and_snr_penalty(if_trace: IqTrace, lo: LoSpec,
                                 rng: RngStream) -> tuple[IqTrace, float]:
    """Mix with a jittered LO; return the output and its SNR penalty in dB.

    The penalty compares the signal power the ideal and the jittered mixer
    deliver along the ideal mixed waveform. Against a fixed noise floor
    that is the SNR difference; for white Gaussian phase with rms
    ``sigma`` it tends to ``-10 log10(exp(-sigma^2))``.
    """
    if len(if_trace) == 0:
        raise ConfigError("IF trace must be non-empty", "awg")
    k = np.arange(len(if_trace))
    lo_phase = 2.0 * np.pi * lo.lo_freq_hz * k / if_trace.sample_rate_hz
    ideal = if_trace.samples * np.exp(1j * lo_phase)
    if lo.phase_jitter_rms_rad == 0:
        return if_trace.with_samples(ideal), 0.0
    theta = rng.generator().standard_normal(len(if_trace)) * lo.phase_jitter_rms_rad
    mixed = ideal * np.exp(1j * theta)
    p_ideal = coherent_power(ideal, ideal)
    p_jit = coherent_power(mixed, ideal)
    return if_trace.with_samples(mixed), 10.0 * math.log10(p_ideal / p_jit)
