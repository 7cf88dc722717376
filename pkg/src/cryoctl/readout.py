"""Dispersive readout plant, amplifier cascade math and ADC binning."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from .errors import ConfigError
from .signals import IqTrace, QuantizerSpec, RngStream, quantize_real

BOLTZMANN = 1.380649e-23
T0_KELVIN = 290.0

_CHUNK_SAMPLES = 1 << 21


@dataclass(frozen=True)
class AmplifierStage:
    name: str
    gain_db: float
    nf_db: float
    bw_hz: float
    dc_power_w: float = 0.0
    in_impedance_ohm: float = 50.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for attr in ("gain_db", "nf_db", "bw_hz", "dc_power_w", "in_impedance_ohm"):
            if not math.isfinite(getattr(self, attr)):
                raise ConfigError(f"stage {self.name!r}: {attr} must be finite", "readout")
        if self.bw_hz <= 0:
            raise ConfigError(f"stage {self.name!r}: bandwidth must be positive", "readout")
        if self.nf_db < 0:
            raise ConfigError(f"stage {self.name!r}: noise figure must be >= 0 dB", "readout")
        if self.dc_power_w < 0:
            raise ConfigError(f"stage {self.name!r}: dc power must be >= 0", "readout")
        if self.in_impedance_ohm <= 0:
            raise ConfigError(f"stage {self.name!r}: input impedance must be positive", "readout")


@dataclass(frozen=True)
class ReadoutCascade:
    stages: tuple

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ConfigError("readout cascade needs at least one stage", "readout")

    def __iter__(self):
        return iter(self.stages)

    def __len__(self):
        return len(self.stages)

    def __add__(self, other: "ReadoutCascade") -> "ReadoutCascade":
        return ReadoutCascade(self.stages + tuple(other))

    @property
    def dc_power_w(self) -> float:
        return sum(s.dc_power_w for s in self.stages)


def _stages(cascade) -> tuple:
    stages = tuple(cascade)
    if not stages:
        raise ConfigError("readout cascade needs at least one stage", "readout")
    return stages


class MatchingChoice(enum.Enum):
    OHM50 = "Ohm50"
    OHM500 = "Ohm500"


@dataclass(frozen=True)
class AdcSpec:
    sample_rate_hz: float = 500e6
    quantizer: QuantizerSpec = QuantizerSpec(12, 1.0)

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ConfigError("ADC sample rate must be positive", "readout")


@dataclass(frozen=True)
class QubitReadoutModel:
    """Per-bin mean chain-input voltages for |0> and |1> plus input noise.

    ``m0``/``m1`` are complex (I + jQ) volts; ``sigma_in`` is the noise std
    per I/Q component per ADC sample.
    """

    m0: np.ndarray
    m1: np.ndarray
    sigma_in: np.ndarray
    bin_duration_s: float
    f_readout_hz: float = 6e9

    def __post_init__(self):
        m0 = np.asarray(self.m0, dtype=np.complex128).ravel()
        m1 = np.asarray(self.m1, dtype=np.complex128).ravel()
        sigma = np.broadcast_to(np.asarray(self.sigma_in, dtype=float), m0.shape).copy()
        if m0.size < 1 or m1.shape != m0.shape:
            raise ConfigError("trajectories must be non-empty and of equal length", "readout")
        if np.any(sigma < 0):
            raise ConfigError("sigma_in must be non-negative", "readout")
        if not 4e9 <= self.f_readout_hz <= 8e9:
            raise ConfigError("readout frequency must lie in the 4-8 GHz band", "readout")
        if not self.bin_duration_s > 0:
            raise ConfigError("bin duration must be positive", "readout")
        for name, arr in (("m0", m0), ("m1", m1), ("sigma_in", sigma)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_bins(self) -> int:
        return self.m0.size

    def mean(self, state: int) -> np.ndarray:
        if state not in (0, 1):
            raise ConfigError(f"state must be 0 or 1, got {state}", "readout")
        return self.m1 if state else self.m0

    @property
    def axis(self) -> complex:
        """Unit IQ direction through the two state means."""
        d = complex(np.sum(self.m1 - self.m0))
        return d / abs(d) if d != 0 else 1.0 + 0j

    def scaled(self, separation_factor: float) -> "QubitReadoutModel":
        """Same plant with ``m1 - m0`` scaled about ``m0``."""
        return QubitReadoutModel(self.m0, self.m0 + separation_factor * (self.m1 - self.m0),
                                 self.sigma_in, self.bin_duration_s, self.f_readout_hz)


def settling_trajectories(n_bins: int = 15, bin_duration_s: float = 40e-9,
                          amplitude_v: float = 4e-6, separation_v: float = 2e-6,
                          ring_up_s: float = 80e-9, decay_s: float = 1.5e-6,
                          phase_rad: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Double-exponential state trajectories sampled at bin centres.

    Both states ring up with ``ring_up_s``; the |1> offset additionally
    relaxes towards |0> with ``decay_s``.
    """
    t = (np.arange(n_bins) + 0.5) * bin_duration_s
    ring = 1.0 - np.exp(-t / ring_up_s)
    m0 = amplitude_v * ring
    m1 = m0 + separation_v * ring * np.exp(-t / decay_s)
    rot = np.exp(1j * phase_rad)
    return m0 * rot, m1 * rot


def load_matching_table() -> dict:
    text = resources.files("cryoctl").joinpath("data/lna_matching.yaml").read_text()
    return yaml.safe_load(text)


def stage_from_dict(d: dict) -> AmplifierStage:
    d = dict(d)
    try:
        return AmplifierStage(
            name=str(d.pop("name")), gain_db=float(d.pop("gain_db")), nf_db=float(d.pop("nf_db")),
            bw_hz=float(d.pop("bw_hz")), dc_power_w=float(d.pop("dc_power_w", 0.0)),
            in_impedance_ohm=float(d.pop("in_impedance_ohm", 50.0)), meta=dict(d.pop("meta", {}) or {}))
    except KeyError as exc:
        raise ConfigError(f"amplifier stage missing field {exc.args[0]!r}", "readout") from None


def matching_params(choice: MatchingChoice | str, table: dict | None = None) -> AmplifierStage:
    """LNA stage for the 50 ohm or 500 ohm input match."""
    choice = MatchingChoice(choice)
    table = load_matching_table() if table is None else table
    return stage_from_dict(table[choice.value])


def cascade_gain_db(cascade) -> float:
    return float(sum(s.gain_db for s in _stages(cascade)))


def cascade_noise_factor(cascade) -> float:
    """Linear Friis noise factor."""
    total = 0.0
    gain = 1.0
    for i, stage in enumerate(_stages(cascade)):
        f = 10.0 ** (stage.nf_db / 10.0)
        total += f if i == 0 else (f - 1.0) / gain
        gain *= 10.0 ** (stage.gain_db / 10.0)
    return total


def cascade_nf_db(cascade) -> float:
    return 10.0 * math.log10(cascade_noise_factor(cascade))


def single_pole_shrinkage(n: int) -> float:
    return math.sqrt(2.0 ** (1.0 / n) - 1.0)


def cascade_bandwidth_hz(cascade, identical_single_pole: bool = False) -> float:
    stages = _stages(cascade)
    if identical_single_pole:
        bws = {s.bw_hz for s in stages}
        if len(bws) != 1:
            raise ConfigError("single-pole rule needs identical stage bandwidths", "readout")
        return stages[0].bw_hz * single_pole_shrinkage(len(stages))
    return min(s.bw_hz for s in stages)


def input_noise_power_w(cascade, identical_single_pole: bool = False) -> float:
    """Input-referred added noise power k*T0*B*(F - 1)."""
    f = cascade_noise_factor(cascade)
    return BOLTZMANN * T0_KELVIN * cascade_bandwidth_hz(cascade, identical_single_pole) * (f - 1.0)


def cascade_noise_sigma_v(cascade, identical_single_pole: bool = False) -> float:
    """Input-referred added noise std per I/Q component, volts."""
    r_in = _stages(cascade)[0].in_impedance_ohm
    return math.sqrt(input_noise_power_w(cascade, identical_single_pole) * r_in / 2.0)


def voltage_gain(cascade) -> float:
    return 10.0 ** (cascade_gain_db(cascade) / 20.0)


def amplify_trace(trace: IqTrace, cascade, rng: RngStream,
                  identical_single_pole: bool = False) -> IqTrace:
    sigma = cascade_noise_sigma_v(cascade, identical_single_pole)
    samples = trace.samples
    if sigma > 0:
        noise = rng.generator().standard_normal((len(trace), 2)) * sigma
        samples = samples + noise[:, 0] + 1j * noise[:, 1]
    return trace.with_samples(voltage_gain(cascade) * samples)


def samples_per_bin(model: QubitReadoutModel, adc: AdcSpec) -> int:
    return max(1, round(model.bin_duration_s * adc.sample_rate_hz))


def shot_stream(seed: int, state: int) -> RngStream:
    return RngStream.named(seed, f"readout.shots.state{state}")


def simulate_shots(model: QubitReadoutModel, state: int, cascade, adc: AdcSpec,
                   seed: int, n_shots: int, first_shot: int = 0) -> np.ndarray:
    """Binned, IQ-projected ADC output for shots ``first_shot .. + n_shots``.

    Shot ``i`` draws from row ``i`` of the per-state stream, so any
    batching or ordering of shots reproduces the same values.
    """
    mean = model.mean(state)
    spb = samples_per_bin(model, adc)
    nb = model.n_bins
    gv = voltage_gain(cascade)
    sigma = np.sqrt(model.sigma_in ** 2 + cascade_noise_sigma_v(cascade) ** 2)
    axis_conj = np.conj(model.axis)
    stream = shot_stream(seed, state)
    q = adc.quantizer
    out = np.empty((n_shots, nb))
    chunk = max(1, _CHUNK_SAMPLES // (nb * spb))
    for lo in range(0, n_shots, chunk):
        n = min(chunk, n_shots - lo)
        v = np.broadcast_to(np.repeat(mean, spb), (n, nb * spb)).astype(np.complex128)
        if np.any(sigma > 0):
            z = stream.normal_block(first_shot + lo, n, 2 * nb * spb)
            s = np.repeat(sigma, spb)
            v = v + s * (z[:, 0::2] + 1j * z[:, 1::2])
        v = gv * v
        v = quantize_real(v.real, q) + 1j * quantize_real(v.imag, q)
        binned = v.reshape(n, nb, spb).mean(axis=2)
        out[lo:lo + n] = (binned * axis_conj).real
    return out


def simulate_shot(model: QubitReadoutModel, state: int, cascade, adc: AdcSpec,
                  seed: int, shot_index: int = 0) -> np.ndarray:
    return simulate_shots(model, state, cascade, adc, seed, 1, shot_index)[0]


def projected_statistics(model: QubitReadoutModel, cascade, adc: AdcSpec):
    """Noise-free per-bin means and per-bin std of :func:`simulate_shots` output.

    Quantization is ignored. Returns ``(mu0, mu1, sigma)``.
    """
    gv = voltage_gain(cascade)
    axis_conj = np.conj(model.axis)
    spb = samples_per_bin(model, adc)
    sigma = gv * np.sqrt(model.sigma_in ** 2 + cascade_noise_sigma_v(cascade) ** 2) / math.sqrt(spb)
    return (gv * (model.m0 * axis_conj).real, gv * (model.m1 * axis_conj).real, sigma)


def write_shots_csv(path, shots0: np.ndarray, shots1: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["shot", "state", "bin", "value"])
        for state, shots in ((0, shots0), (1, shots1)):
            for i, row in enumerate(shots):
                for k, v in enumerate(row):
                    writer.writerow([i, state, k, repr(float(v))])
