"""Signal primitives: complex traces, tones, noise, quantization, dB helpers.

All RF quantities are carried as complex baseband samples; a carrier
frequency, where one matters, is metadata on the caller's side.
"""

from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError

NEG_INF_DBM = float("-inf")


@dataclass(frozen=True)
class IqTrace:
    """Uniformly sampled complex voltage signal (I + jQ, volts)."""

    samples: np.ndarray
    sample_rate_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128).ravel()
        if not self.sample_rate_hz > 0:
            raise ConfigError("sample_rate_hz must be positive", "signal-core")
        if not np.all(np.isfinite(samples)):
            raise ConfigError("trace samples must be finite", "signal-core")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(len(self)) / self.sample_rate_hz

    def with_samples(self, samples) -> "IqTrace":
        return IqTrace(samples, self.sample_rate_hz, self.start_time_s)

    def to_csv(self, path) -> None:
        """Write ``index,t_s,i_v,q_v`` rows at full double precision."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["index", "t_s", "i_v", "q_v"])
            for k, (t, v) in enumerate(zip(self.times, self.samples)):
                writer.writerow([k, repr(float(t)), repr(float(v.real)), repr(float(v.imag))])

    @classmethod
    def from_csv(cls, path, sample_rate_hz: float) -> "IqTrace":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        start = float(rows[0]["t_s"]) if rows else 0.0
        samples = [complex(float(r["i_v"]), float(r["q_v"])) for r in rows]
        return cls(np.array(samples, dtype=np.complex128), sample_rate_hz, start)


@dataclass(frozen=True)
class QuantizerSpec:
    bits: int
    full_scale_v: float

    def __post_init__(self):
        if not (isinstance(self.bits, (int, np.integer)) and 1 <= self.bits <= 24):
            raise ConfigError(f"quantizer bits must be in 1..24, got {self.bits}", "signal-core")
        if not self.full_scale_v > 0:
            raise ConfigError("quantizer full_scale_v must be positive", "signal-core")

    @property
    def step(self) -> float:
        return 2.0 * self.full_scale_v / 2 ** self.bits

    @property
    def code_range(self) -> tuple[int, int]:
        half = 2 ** (self.bits - 1)
        return -half, half - 1


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Backed by Philox, so every stream is an independent key and drawing
    from one block never shifts another block's sequence.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer", "signal-core")
        if not 0 <= self.stream_id < 2 ** 64:
            raise ConfigError("stream_id must be a 64-bit unsigned integer", "signal-core")

    @classmethod
    def named(cls, seed: int, name: str) -> "RngStream":
        return cls(seed, zlib.crc32(name.encode("utf-8")))

    def substream(self, name: str) -> "RngStream":
        mixed = zlib.crc32(name.encode("utf-8"), self.stream_id & 0xFFFFFFFF)
        return RngStream(self.seed, (self.stream_id << 32 | mixed) & (2 ** 64 - 1))

    def bit_generator(self) -> np.random.Philox:
        return np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(self.bit_generator())

    def normal_block(self, first_row: int, n_rows: int, row_width: int) -> np.ndarray:
        """Standard normals for rows ``first_row .. first_row + n_rows``.

        Row ``r`` always maps to the same counter range of the stream, so
        any chunking (or ordering) of rows reproduces identical values.
        ``row_width`` must be even; values come from Box-Muller over
        uniforms that consume exactly one 64-bit word each.
        """
        if row_width % 2:
            raise ConfigError("row_width must be even", "signal-core")
        words = row_width + (-row_width) % 4  # Philox emits 4 words per counter step
        bitgen = self.bit_generator()
        bitgen.advance(first_row * words // 4)
        u = np.random.Generator(bitgen).random((n_rows, words))[:, :row_width]
        u1 = 1.0 - u[:, 0::2]
        u2 = u[:, 1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        out = np.empty((n_rows, row_width))
        out[:, 0::2] = radius * np.cos(2.0 * np.pi * u2)
        out[:, 1::2] = radius * np.sin(2.0 * np.pi * u2)
        return out


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        raise ConfigError(f"{what} must be finite", "signal-core")


def db_to_power_ratio(db):
    _check_finite(db, "db")
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (float(db) / 10.0)


def db_to_voltage_ratio(db):
    _check_finite(db, "db")
    return 10.0 ** (np.asarray(db, dtype=float) / 20.0) if np.ndim(db) else 10.0 ** (float(db) / 20.0)


def power_ratio_to_db(ratio):
    return 10.0 * np.log10(ratio)


def synth_tone(freq_hz: float, amplitude_v: float, phase_rad: float,
               sample_rate_hz: float, n_samples: int) -> IqTrace:
    if not 0 <= freq_hz < sample_rate_hz / 2:
        raise ConfigError(
            f"tone frequency {freq_hz} Hz must lie in [0, Nyquist={sample_rate_hz / 2} Hz)",
            "signal-core")
    k = np.arange(n_samples)
    phase = 2.0 * np.pi * freq_hz * k / sample_rate_hz + phase_rad
    return IqTrace(amplitude_v * np.exp(1j * phase), sample_rate_hz)


def add_awgn(trace: IqTrace, sigma_v: float, rng: RngStream) -> IqTrace:
    """Add complex white Gaussian noise, ``sigma_v`` per real/imag component."""
    if sigma_v < 0:
        raise ConfigError("sigma_v must be non-negative", "signal-core")
    if sigma_v == 0:
        return trace
    noise = rng.generator().standard_normal((len(trace), 2)) * sigma_v
    return trace.with_samples(trace.samples + noise[:, 0] + 1j * noise[:, 1])


def quantize_real(x: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    lo, hi = spec.code_range
    codes = np.clip(np.round(np.asarray(x, dtype=float) / spec.step), lo, hi)
    return codes * spec.step


def quantize(trace: IqTrace, spec: QuantizerSpec) -> IqTrace:
    """Mid-tread uniform quantizer applied to I and Q independently."""
    s = trace.samples
    return trace.with_samples(quantize_real(s.real, spec) + 1j * quantize_real(s.imag, spec))


def trace_power_dbm(trace: IqTrace, ref_impedance_ohm: float = 50.0) -> float:
    if not ref_impedance_ohm > 0:
        raise ConfigError("reference impedance must be positive", "signal-core")
    if len(trace) == 0:
        return NEG_INF_DBM
    p_w = float(np.mean(np.abs(trace.samples) ** 2)) / ref_impedance_ohm
    if p_w == 0:
        return NEG_INF_DBM
    return 10.0 * math.log10(p_w / 1e-3)


def dominant_bin(samples: Sequence[complex]) -> int:
    """Index of the largest-magnitude DFT bin."""
    return int(np.argmax(np.abs(np.fft.fft(samples))))
