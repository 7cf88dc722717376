import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cryoctl.discriminator import (CalibrationData, Discriminator, build_discriminator, calibrate,
                                   discriminate, fidelity_analytic, fidelity_monte_carlo, mac_score,
                                   matched_weights, optimal_window, wilson_interval)
from cryoctl.errors import ConfigError, DegenerateCalibrationError
from cryoctl.readout import AdcSpec, AmplifierStage, QubitReadoutModel
from cryoctl.signals import QuantizerSpec

from .oracles import brute_force_window, fisher_direction, q_function
from .plants import ADC, CASCADE, tuned_plant

N = 15


def cal_of(mu0, mu1, s, n=1000):
    return CalibrationData(np.asarray(mu0, float), np.asarray(mu1, float), np.asarray(s, float), n, n)


def test_calibrate_constant_shots():
    shots = np.full((5, N), 0.25)
    cal = calibrate(shots, shots)
    assert np.all(cal.mu0 == 0.25) and np.all(cal.mu1 == 0.25) and np.all(cal.s == 0)


def test_calibrate_recovers_gaussian_statistics():
    rng = np.random.default_rng(1)
    mu = np.linspace(-1, 1, N)
    sigma = 0.3
    cal = calibrate(rng.normal(mu, sigma, (10_000, N)), rng.normal(mu + 0.5, sigma, (10_000, N)))
    assert np.all(np.abs(cal.mu0 - mu) < 4 * sigma / 100)
    assert np.all(np.abs(cal.mu1 - mu - 0.5) < 4 * sigma / 100)
    assert np.all(np.abs(cal.s - sigma) < 0.05 * sigma)


def test_calibrate_rejects_bad_shapes():
    with pytest.raises(ConfigError):
        calibrate(np.zeros((4, 15)), np.zeros((4, 14)))
    with pytest.raises(ConfigError):
        calibrate(np.zeros((1, 15)), np.zeros((4, 15)))


def test_matched_weight_examples():
    assert np.all(matched_weights(cal_of(np.ones(N), np.ones(N), np.ones(N))) == 0)
    mu1 = np.zeros(N)
    mu1[5] = 2.0
    w = matched_weights(cal_of(np.zeros(N), mu1, np.ones(N)))
    assert np.flatnonzero(w).tolist() == [5]


def test_zero_noise_bins_borrow_smallest_std():
    s = np.ones(N)
    s[2] = 0.0
    s[9] = 0.5
    w = matched_weights(cal_of(np.zeros(N), np.ones(N), s))
    assert w[2] == pytest.approx(1 / 0.25)


def test_matched_weights_follow_fisher_direction():
    rng = np.random.default_rng(7)
    mu0, mu1, s = rng.normal(size=N), rng.normal(size=N), rng.uniform(0.2, 2.0, N)
    w = matched_weights(cal_of(mu0, mu1, s))
    f = fisher_direction(mu0, mu1, s)
    assert w @ f / (np.linalg.norm(w) * np.linalg.norm(f)) > 0.9999


def test_mac_score_examples():
    d = Discriminator(np.ones(N), 0, N - 1, 0.0)
    assert mac_score(np.zeros(N), d) == 0
    assert mac_score(np.arange(1, N + 1), d) == 120
    win = Discriminator(np.ones(N), 3, 7, 0.0)
    x = np.arange(N, dtype=float)
    y = x.copy()
    y[[0, 1, 2, 8, 14]] += 100
    assert mac_score(x, win) == mac_score(y, win)
    with pytest.raises(ConfigError):
        mac_score(np.zeros(N - 1), d)


@given(st.floats(-1e6, 1e6))
def test_discriminate_ties_to_zero(theta):
    assert discriminate(theta + 1, theta) == 1
    assert discriminate(theta, theta) == 0


def test_midpoint_threshold_balances_errors():
    rng = np.random.default_rng(11)
    n = 10 ** 5
    m0, m1, sigma = -1.0, 1.5, 1.0
    theta = 0.5 * (m0 + m1)
    e0 = np.count_nonzero(discriminate(rng.normal(m0, sigma, n), theta) == 1)
    e1 = np.count_nonzero(discriminate(rng.normal(m1, sigma, n), theta) == 0)
    lo0, hi0 = wilson_interval(e0, n)
    lo1, hi1 = wilson_interval(e1, n)
    assert lo0 <= hi1 and lo1 <= hi0


def test_optimal_window_examples():
    mu1 = np.zeros(N)
    mu1[3:8] = 1.0
    assert optimal_window(cal_of(np.zeros(N), mu1, np.ones(N))) == (3, 7)
    assert optimal_window(cal_of(np.zeros(N), np.ones(N), np.ones(N))) == (0, N - 1)
    with pytest.raises(DegenerateCalibrationError):
        optimal_window(cal_of(np.ones(N), np.ones(N), np.ones(N)))


def test_fidelity_examples():
    cal = cal_of(np.zeros(N), np.zeros(N), np.ones(N))
    assert fidelity_analytic(cal, Discriminator(np.ones(N), 0, N - 1, 0.0)).fidelity == 0.5
    noiseless = cal_of(np.zeros(N), np.ones(N), np.zeros(N))
    assert fidelity_analytic(noiseless, build_discriminator(noiseless)).fidelity == 1.0
    flat = cal_of(np.ones(N), np.ones(N), np.zeros(N))
    with pytest.raises(DegenerateCalibrationError):
        fidelity_analytic(flat, Discriminator(np.ones(N), 0, N - 1, 0.0))


def test_fidelity_at_target_ratio():
    mu1 = np.zeros(N)
    mu1[0] = 6.18
    cal = cal_of(np.zeros(N), mu1, np.ones(N))
    fid = fidelity_analytic(cal, build_discriminator(cal)).fidelity
    assert fid == pytest.approx(1 - q_function(3.09), abs=1e-12)
    assert fid == pytest.approx(0.999, abs=1e-4)


@pytest.mark.parametrize("ratio", [1.0, 2.0, 3.0, 4.5, 6.18])
def test_analytic_agrees_with_monte_carlo(ratio):
    model, cal, d = tuned_plant(ratio)
    analytic = fidelity_analytic(cal, d).fidelity
    n = 200_000
    mc = fidelity_monte_carlo(model, CASCADE, ADC, d, n, seed=99)
    se = math.sqrt(analytic * (1 - analytic) / (2 * n))
    assert abs(mc.fidelity - analytic) <= 3 * se


def test_monte_carlo_noiseless_and_deterministic():
    m0 = np.full(N, 1e-6 + 0j)
    model = QubitReadoutModel(m0, m0 + 2e-6, 0.0, 2e-9)
    ideal = [AmplifierStage("ideal", 80.0, 0.0, 5e9)]
    adc = AdcSpec(500e6, QuantizerSpec(14, 1.0))
    cal = cal_of(np.full(N, 0.01), np.full(N, 0.03), np.full(N, 1e-3))
    d = build_discriminator(cal)
    assert fidelity_monte_carlo(model, ideal, adc, d, 500, seed=1).fidelity == 1.0
    model, _, d = tuned_plant(3.0)
    a = fidelity_monte_carlo(model, CASCADE, ADC, d, 1000, seed=5)
    b = fidelity_monte_carlo(model, CASCADE, ADC, d, 1000, seed=5)
    assert a == b
    with pytest.raises(ConfigError):
        fidelity_monte_carlo(model, CASCADE, ADC, d, 99, seed=5)


def test_discriminator_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    cal = cal_of(rng.normal(size=N), rng.normal(size=N), rng.uniform(0.1, 1, N))
    d = build_discriminator(cal, optimal_window(cal))
    d.to_csv(tmp_path / "d.csv")
    back = Discriminator.from_csv(tmp_path / "d.csv")
    assert np.array_equal(back.weights, d.weights)
    assert (back.window, back.threshold) == (d.window, d.threshold)


vec = hnp.arrays(float, N, elements=st.floats(-10, 10))
pos = hnp.arrays(float, N, elements=st.floats(0.05, 5))


@given(vec, vec, vec, st.floats(-5, 5), st.integers(0, N - 1), st.integers(0, N - 1))
def test_score_linearity(w, x, y, alpha, a, b):
    a, b = sorted((a, b))
    d = Discriminator(w, a, b, 0.0)
    lhs = mac_score(alpha * x + y, d)
    rhs = alpha * mac_score(x, d) + mac_score(y, d)
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + np.abs(w) @ (abs(alpha) * np.abs(x) + np.abs(y))))


@given(vec, vec, st.floats(-50, 50), st.floats(0.01, 100))
def test_classification_scale_invariant(w, x, theta, c):
    d = Discriminator(w, 0, N - 1, theta)
    scaled = Discriminator(c * w, 0, N - 1, c * theta)
    score = mac_score(x, d)
    assume(abs(score - theta) > 1e-9 * (1 + abs(theta)))
    assert discriminate(score, theta) == discriminate(mac_score(x, scaled), c * theta)


@settings(max_examples=50, deadline=None)
@given(vec, vec, pos)
def test_window_matches_independent_enumeration(mu0, mu1, s):
    assume(np.any(mu1 != mu0))
    cal = cal_of(mu0, mu1, s)
    assert optimal_window(cal) == brute_force_window(mu0, mu1, s)


@given(vec, vec, pos, st.integers(0, N - 1), st.integers(0, N - 1))
def test_matched_beats_uniform(mu0, mu1, s, a, b):
    a, b = sorted((a, b))
    cal = cal_of(mu0, mu1, s)
    assume(np.any(mu1[a:b + 1] != mu0[a:b + 1]))
    matched = fidelity_analytic(cal, build_discriminator(cal, (a, b))).fidelity
    sign = 1.0 if np.sum(mu1[a:b + 1] - mu0[a:b + 1]) >= 0 else -1.0
    uniform = fidelity_analytic(cal, build_discriminator(cal, (a, b), sign * np.ones(N))).fidelity
    assert matched >= uniform - 1e-12


@given(vec, pos, st.floats(0, 3), st.floats(0, 3))
def test_fidelity_monotone_in_separation(mu0, s, k1, k2):
    lo, hi = sorted((k1, k2))
    direction = np.linspace(0.1, 1.0, N)
    fids = []
    for k in (lo, hi):
        cal = cal_of(mu0, mu0 + k * direction, s)
        fixed = Discriminator(direction / s ** 2, 0, N - 1, 0.0)
        d = Discriminator(fixed.weights, 0, N - 1, build_discriminator(cal, weights=fixed.weights).threshold)
        fids.append(fidelity_analytic(cal, d).fidelity)
    assert fids[0] <= fids[1] + 1e-12
