import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cryoctl.errors import CapacityExceededError, ConfigError
from cryoctl.fdma import Band, allocate, capacity, crosstalk_db, leakage_db

BAND = Band(4e9, 8e9)


def test_capacity_examples():
    assert capacity(BAND, 40e6, 10e6) == 80
    assert capacity(BAND, 5e9, 0) == 0
    assert capacity(BAND, 1e9, 0) == 4
    with pytest.raises(ConfigError):
        Band(8e9, 4e9)


def test_allocate_examples():
    assert allocate(1, BAND, 40e6, 10e6).centers_hz[0] == pytest.approx(4.02e9)
    full = allocate(80, BAND, 40e6, 10e6)
    assert full.centers_hz[-1] + 20e6 <= 8e9 * (1 + 1e-12)
    with pytest.raises(CapacityExceededError) as info:
        allocate(81, BAND, 40e6, 10e6)
    assert "80" in str(info.value)


def test_crosstalk_examples():
    plan = allocate(3, BAND, 40e6, 10e6)
    m = crosstalk_db(plan)
    assert np.all(np.diag(m) == 0)
    assert np.array_equal(m, m.T)
    assert leakage_db(20e6, 40e6) == 0.0
    assert leakage_db(math.inf, 40e6) == -math.inf
    for r in (1.0, 2.0, 3.5):
        drop = leakage_db(100e6, 40e6, r) - leakage_db(200e6, 40e6, r)
        assert drop == pytest.approx(10 * r * math.log10(2), abs=1e-12)


def test_crosstalk_decreasing_in_spacing():
    m = crosstalk_db(allocate(6, BAND, 40e6, 10e6))
    row = m[0, 1:]
    assert np.all(np.diff(row) < 0)


def _brute_capacity(span, bw, guard):
    n = 0
    while (n + 1) * bw + n * guard <= span:
        n += 1
    return n


@given(st.integers(1, 60), st.integers(1, 30), st.integers(0, 20))
def test_capacity_matches_brute_force(span, bw, guard):
    band = Band(0.0, float(span))
    cap = capacity(band, float(bw), float(guard))
    assert cap == _brute_capacity(span, bw, guard)
    if cap:
        allocate(cap, band, float(bw), float(guard))
    with pytest.raises(CapacityExceededError):
        allocate(cap + 1, band, float(bw), float(guard))


@settings(max_examples=200)
@given(st.floats(1e8, 1e10), st.floats(1e8, 8e9), st.floats(1e5, 5e8), st.floats(0, 1e8),
       st.floats(0, 1))
def test_plans_satisfy_invariants(f_lo, span, bw, guard, frac):
    band = Band(f_lo, f_lo + span)
    cap = capacity(band, bw, guard)
    if cap == 0:
        return
    n = max(1, int(frac * cap))
    plan = allocate(n, band, bw, guard)
    plan.validate()
    assert len(plan.centers_hz) == n
