"""Weighted multiply-accumulate qubit state discrimination.

Calibration statistics per time bin feed a matched filter, the optimal
contiguous measurement window and a midpoint threshold. Fidelity is
estimated either from the Gaussian score model or by simulating shots
through the readout plant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import norm

from .errors import ConfigError, DegenerateCalibrationError
from .readout import AdcSpec, QubitReadoutModel, simulate_shots

MAX_WINDOW_BINS = 64
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class CalibrationData:
    mu0: np.ndarray
    mu1: np.ndarray
    s: np.ndarray
    n0: int
    n1: int

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float).ravel().copy() for a in (self.mu0, self.mu1, self.s)]
        if len({a.size for a in arrs}) != 1 or arrs[0].size < 1:
            raise ConfigError("calibration arrays must share a non-zero length", "discriminator")
        if np.any(arrs[2] < 0):
            raise ConfigError("pooled std must be non-negative", "discriminator")
        if self.n0 < 2 or self.n1 < 2:
            raise ConfigError("calibration needs at least 2 shots per state", "discriminator")
        for name, a in zip(("mu0", "mu1", "s"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n_bins(self) -> int:
        return self.mu0.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin", "mu0", "mu1", "s", "n0", "n1"])
            for k in range(self.n_bins):
                w.writerow([k, repr(float(self.mu0[k])), repr(float(self.mu1[k])),
                            repr(float(self.s[k])), self.n0, self.n1])


@dataclass(frozen=True)
class Discriminator:
    weights: np.ndarray
    start_bin: int
    end_bin: int
    threshold: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel().copy()
        if not np.all(np.isfinite(w)):
            raise ConfigError("weights must be finite", "discriminator")
        if not 0 <= self.start_bin <= self.end_bin < w.size:
            raise ConfigError(
                f"window [{self.start_bin}, {self.end_bin}] invalid for {w.size} bins", "discriminator")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_bins(self) -> int:
        return self.weights.size

    @property
    def window(self) -> tuple[int, int]:
        return self.start_bin, self.end_bin

    def to_csv(self, path) -> None:
        """Weights plus window and threshold; floats written as exact hex."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["key", "value"])
            w.writerow(["start_bin", self.start_bin])
            w.writerow(["end_bin", self.end_bin])
            w.writerow(["threshold", float(self.threshold).hex()])
            for k, v in enumerate(self.weights):
                w.writerow([f"w{k}", float(v).hex()])

    @classmethod
    def from_csv(cls, path) -> "Discriminator":
        with open(path, newline="") as fh:
            rows = {r["key"]: r["value"] for r in csv.DictReader(fh)}
        n = sum(1 for k in rows if k.startswith("w"))
        weights = [float.fromhex(rows[f"w{k}"]) for k in range(n)]
        return cls(np.array(weights), int(rows["start_bin"]), int(rows["end_bin"]),
                   float.fromhex(rows["threshold"]))


@dataclass(frozen=True)
class FidelityEstimate:
    fidelity: float
    half_width: float
    method: str
    n_shots: int | None = None
    ci_low: float | None = None
    ci_high: float | None = None

    @property
    def interval(self) -> tuple[float, float]:
        if self.ci_low is not None:
            return self.ci_low, self.ci_high
        return self.fidelity - self.half_width, self.fidelity + self.half_width

    def contains(self, value: float) -> bool:
        lo, hi = self.interval
        return lo <= value <= hi


def calibrate(shots0, shots1) -> CalibrationData:
    """Per-bin means and pooled Bessel-corrected std from labelled shots."""
    x0 = np.atleast_2d(np.asarray(shots0, dtype=float))
    x1 = np.atleast_2d(np.asarray(shots1, dtype=float))
    if x0.shape[1] != x1.shape[1]:
        raise ConfigError(
            f"bin count mismatch: state 0 has {x0.shape[1]} bins, state 1 has {x1.shape[1]}",
            "discriminator")
    n0, n1 = x0.shape[0], x1.shape[0]
    if n0 < 2 or n1 < 2:
        raise ConfigError("calibration needs at least 2 shots per state", "discriminator")
    mu0 = x0.mean(axis=0)
    mu1 = x1.mean(axis=0)
    ss = ((x0 - mu0) ** 2).sum(axis=0) + ((x1 - mu1) ** 2).sum(axis=0)
    return CalibrationData(mu0, mu1, np.sqrt(ss / (n0 + n1 - 2)), n0, n1)


def _effective_std(s: np.ndarray) -> np.ndarray:
    nz = s[s > 0]
    floor = nz.min() if nz.size else 1.0
    return np.where(s > 0, s, floor)


def matched_weights(cal: CalibrationData) -> np.ndarray:
    """w[k] = (mu1[k] - mu0[k]) / s[k]^2; zero-noise bins borrow the smallest nonzero s."""
    return (cal.mu1 - cal.mu0) / _effective_std(cal.s) ** 2


def mac_score(x, d: Discriminator) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d.n_bins:
        raise ConfigError(f"bin vector length {x.shape[-1]} != {d.n_bins}", "discriminator")
    a, b = d.window
    return x[..., a:b + 1] @ d.weights[a:b + 1]


def discriminate(score, threshold: float):
    """State 1 iff score > threshold (ties resolve to 0)."""
    out = np.asarray(score) > threshold
    return int(out) if out.ndim == 0 else out.astype(np.int8)


def score_moments(cal: CalibrationData, weights: np.ndarray, start: int, end: int):
    """(M0, M1, sigma) of the MAC score under the per-bin Gaussian model."""
    sl = slice(start, end + 1)
    w = weights[sl]
    return (float(w @ cal.mu0[sl]), float(w @ cal.mu1[sl]),
            math.sqrt(float((w ** 2) @ (cal.s[sl] ** 2))))


def build_discriminator(cal: CalibrationData, window: tuple[int, int] | None = None,
                        weights: np.ndarray | None = None) -> Discriminator:
    """Discriminator with matched weights zeroed outside the window and a midpoint threshold."""
    a, b = window if window is not None else (0, cal.n_bins - 1)
    full = matched_weights(cal) if weights is None else np.asarray(weights, dtype=float)
    w = np.zeros(cal.n_bins)
    w[a:b + 1] = full[a:b + 1]
    m0, m1, _ = score_moments(cal, w, a, b)
    return Discriminator(w, a, b, 0.5 * (m0 + m1))


def _unit_moments(cal: CalibrationData, weights: np.ndarray, start: int, end: int):
    """Score moments with weights rescaled to unit peak, plus that scale.

    Classification and separation are invariant under positive rescaling,
    and the rescaling keeps w^2 s^2 from underflowing for tiny weights.
    """
    w = np.zeros_like(weights)
    w[start:end + 1] = weights[start:end + 1]
    peak = float(np.max(np.abs(w)))
    scale = peak if peak > 0 else 1.0
    return score_moments(cal, w / scale, start, end) + (scale,)


def _error_rates(m0, m1, sigma, theta):
    """P(assign 1 | state 0), P(assign 0 | state 1) for score = N(M, sigma)."""
    if sigma == 0:
        e0 = float(m0 > theta)
        e1 = float(not m1 > theta)
        return e0, e1
    return float(ndtr((m0 - theta) / sigma)), float(ndtr((theta - m1) / sigma))


def fidelity_analytic(cal: CalibrationData, d: Discriminator) -> FidelityEstimate:
    m0, m1, sigma, scale = _unit_moments(cal, d.weights, d.start_bin, d.end_bin)
    if sigma == 0 and m0 == m1:
        raise DegenerateCalibrationError("score has neither separation nor noise")
    e0, e1 = _error_rates(m0, m1, sigma, d.threshold / scale)
    return FidelityEstimate(1.0 - 0.5 * (e0 + e1), 0.0, "analytic")


def separation_ratio(cal: CalibrationData, d: Discriminator) -> float:
    """|M1 - M0| / sigma of the score."""
    m0, m1, sigma, _ = _unit_moments(cal, d.weights, d.start_bin, d.end_bin)
    if sigma == 0:
        return math.inf if m1 != m0 else 0.0
    return abs(m1 - m0) / sigma


def window_snr(cal: CalibrationData, start: int, end: int) -> float:
    """Score separation ratio of matched weights restricted to ``[start, end]``."""
    m0, m1, sigma, _ = _unit_moments(cal, matched_weights(cal), start, end)
    if sigma == 0:
        return math.inf if m1 != m0 else 0.0
    return abs(m1 - m0) / sigma


def optimal_window(cal: CalibrationData) -> tuple[int, int]:
    """Exhaustive search over contiguous windows for the best analytic fidelity.

    Fidelity under a midpoint threshold is monotone in the window's
    separation ratio, so the ratio is ranked directly (it does not
    saturate in floating point). Ties go to the shortest window, then the
    earliest.
    """
    n = cal.n_bins
    if n > MAX_WINDOW_BINS:
        raise ConfigError(f"window search supports up to {MAX_WINDOW_BINS} bins", "discriminator")
    if np.all(cal.mu1 == cal.mu0):
        raise DegenerateCalibrationError("no bin separates the two states")
    best = None
    best_snr = -1.0
    for length in range(1, n + 1):
        for a in range(0, n - length + 1):
            b = a + length - 1
            snr = window_snr(cal, a, b)
            if best is None or snr > best_snr * (1 + _TIE_RTOL):
                best, best_snr = (a, b), snr
    return best


def fidelity_from_ratio(ratio: float) -> float:
    """Midpoint-threshold fidelity for a separation ratio Delta/sigma."""
    return float(1.0 - norm.sf(ratio / 2.0))


def wilson_interval(errors: int, n: int, z: float = 1.959963984540054):
    p = errors / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return centre - half, centre + half


def fidelity_monte_carlo(model: QubitReadoutModel, cascade, adc: AdcSpec, d: Discriminator,
                         n_shots: int, seed: int) -> FidelityEstimate:
    """Fidelity from ``n_shots`` simulated shots per state.

    The 95% Wilson interval is taken on the pooled misassignment rate,
    which equals (FPR + FNR) / 2 for equal shot counts.
    """
    if n_shots < 100:
        raise ConfigError("Monte-Carlo fidelity needs at least 100 shots per state", "discriminator")
    errors = 0
    chunk = 1 << 16
    for state in (0, 1):
        for lo in range(0, n_shots, chunk):
            n = min(chunk, n_shots - lo)
            x = simulate_shots(model, state, cascade, adc, seed, n, lo)
            bits = discriminate(mac_score(x, d), d.threshold)
            errors += int(np.count_nonzero(bits != state))
    total = 2 * n_shots
    lo, hi = wilson_interval(errors, total)
    fid = 1.0 - errors / total
    half = 0.5 * (hi - lo)
    return FidelityEstimate(fid, half, "monte_carlo", n_shots, 1.0 - hi, 1.0 - lo)
