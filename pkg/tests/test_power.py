import pytest
from hypothesis import given
from hypothesis import strategies as st

from cryoctl.errors import ConfigError
from cryoctl.power import (ActivityWindow, BlockPower, GatingMode, GatingPolicy, average_power,
                           merge_intervals, per_qubit_budget, power_report, schedule_gating)
from cryoctl.sequencer import ClockTree, compile_timeline, parse_program

CLK = 100e6


def test_full_duty_every_mode():
    b = BlockPower("x", 1e-3, 2e-3)
    for mode in GatingMode:
        act = ActivityWindow("x", [(0, 100)], mode)
        assert average_power(b, act, 100, CLK) == pytest.approx(3e-3, rel=1e-15)


def test_discriminator_clock_gated():
    b = BlockPower("disc0", 0.0, 256e-6)
    act = ActivityWindow("disc0", [(0, 2133)], GatingMode.CLOCK_GATED)
    assert average_power(b, act, 10_000, CLK) == pytest.approx(54.6e-6, abs=0.1e-6)
    ungated = ActivityWindow("disc0", [(0, 2133)], GatingMode.NONE)
    assert average_power(b, ungated, 10_000, CLK) == 256e-6


def test_power_gated_idle_is_zero():
    b = BlockPower("x", 1e-3, 2e-3, wake_energy_j=1e-9)
    assert average_power(b, ActivityWindow("x", (), GatingMode.POWER_GATED), 1000, CLK) == 0.0


def test_power_gated_wake_energy():
    b = BlockPower("x", 0.0, 1e-3, wake_energy_j=1e-12)
    act = ActivityWindow("x", [(0, 10), (50, 60)], GatingMode.POWER_GATED)
    frame_s = 1000 / CLK
    assert average_power(b, act, 1000, CLK) == pytest.approx(1e-3 * 0.02 + 2e-12 / frame_s)


def test_frame_zero_rejected():
    with pytest.raises(ConfigError):
        average_power(BlockPower("x", 0, 0), ActivityWindow("x"), 0, CLK)


def test_activity_invariants():
    with pytest.raises(ConfigError):
        ActivityWindow("x", [(10, 20), (15, 30)])
    with pytest.raises(ConfigError):
        ActivityWindow("x", [(5, 5)])


def _blocks(*names, latency=0):
    return {n: BlockPower(n, 1e-6, 1e-3, wake_latency_cycles=latency) for n in names}


def test_schedule_only_pulsed_channel_active():
    tl = compile_timeline(parse_program("PULSE ch=0 wave=a amp=1 phase=0 at=10 len=20\nHALT"),
                          ClockTree(blocks=("awg0", "awg1")))
    pol = {n: GatingPolicy(GatingMode.CLOCK_GATED) for n in ("awg0", "awg1")}
    win = schedule_gating(tl, pol, _blocks("awg0", "awg1"), 1000)
    assert win["awg0"].intervals == ((10, 30),)
    assert win["awg1"].intervals == ()


def test_schedule_measure_duty_with_margin():
    tl = compile_timeline(parse_program("MEASURE ch=0 at=300 window=200\nHALT"))
    pol = {n: GatingPolicy(GatingMode.POWER_GATED, 5) for n in ("adc0", "disc0")}
    win = schedule_gating(tl, pol, _blocks("adc0", "disc0", latency=5), 1000)
    for name in ("adc0", "disc0"):
        assert win[name].intervals == ((295, 500),)
        assert win[name].duty(1000) == pytest.approx(0.205)


def test_schedule_merges_overlaps():
    tl = compile_timeline(parse_program("PULSE ch=0 wave=a amp=1 phase=0 at=10 len=40\n"
                                        "PULSE ch=0 wave=a amp=1 phase=0 at=30 len=40\nHALT"))
    win = schedule_gating(tl, {}, _blocks("awg0"), 1000)
    assert win["awg0"].intervals == ((10, 70),)


def test_schedule_margin_below_latency():
    tl = compile_timeline(parse_program("HALT"))
    with pytest.raises(ConfigError):
        schedule_gating(tl, {"awg0": GatingPolicy(GatingMode.POWER_GATED, 2)},
                        _blocks("awg0", latency=3), 1000)


def test_per_qubit_budget():
    blocks = {"awg": BlockPower("awg", 0.0, 8e-3, shared=True),
              "disc": BlockPower("disc", 0.0, 0.256e-3)}
    report = power_report(blocks, {}, 1000, CLK)
    assert per_qubit_budget(report, 1) == pytest.approx(report.total_w)
    assert per_qubit_budget(report, 8) == pytest.approx(1.256e-3, rel=1e-12)
    with pytest.raises(ConfigError):
        per_qubit_budget(report, 0)
    all_shared = power_report({"a": BlockPower("a", 1e-3, 1e-3, shared=True)}, {}, 1000, CLK)
    assert per_qubit_budget(all_shared, 4) == pytest.approx(all_shared.total_w / 4)


def test_report_totals_are_sums():
    blocks = _blocks("a", "b", "c")
    windows = {"a": ActivityWindow("a", [(0, 100)], GatingMode.CLOCK_GATED),
               "b": ActivityWindow("b", [(0, 300)], GatingMode.POWER_GATED)}
    r = power_report(blocks, windows, 1000, CLK)
    assert r.total_w == pytest.approx(sum(b.avg_w for b in r.blocks), rel=1e-15)
    assert r.energy_j == pytest.approx(r.total_w * r.frame_s, rel=1e-12)
    assert all(0 <= b.duty <= 1 for b in r.blocks)
    assert r.to_csv().splitlines()[0] == "name,mode,duty,avg_w,energy_j,on_time_s,shared"


interval_lists = st.lists(st.tuples(st.integers(0, 900), st.integers(1, 100)), max_size=8).map(
    lambda xs: merge_intervals((a, a + n) for a, n in xs))
block_st = st.builds(BlockPower, st.just("b"), st.floats(0, 1e-3), st.floats(0, 1e-3))


@given(block_st, interval_lists)
def test_gated_never_exceeds_ungated(block, ivs):
    ungated = average_power(block, ActivityWindow("b", ivs, GatingMode.NONE), 1000, CLK)
    for mode in (GatingMode.CLOCK_GATED, GatingMode.POWER_GATED):
        gated = average_power(block, ActivityWindow("b", ivs, mode), 1000, CLK)
        assert gated <= ungated * (1 + 1e-12)


@given(block_st, st.integers(0, 1000), st.integers(0, 1000),
       st.sampled_from(list(GatingMode)))
def test_monotone_in_duty(block, n1, n2, mode):
    lo, hi = sorted((n1, n2))
    p = [average_power(block, ActivityWindow("b", [(0, n)] if n else [], mode), 1000, CLK)
         for n in (lo, hi)]
    assert p[0] <= p[1] * (1 + 1e-12) + 1e-30


@given(block_st, interval_lists, interval_lists, st.sampled_from(list(GatingMode)))
def test_energy_additive_over_frames(block, ivs1, ivs2, mode):
    frame = 1000
    e1 = average_power(block, ActivityWindow("b", ivs1, mode), frame, CLK) * frame / CLK
    e2 = average_power(block, ActivityWindow("b", ivs2, mode), frame, CLK) * frame / CLK
    joined = list(ivs1) + [(a + frame, b + frame) for a, b in ivs2]
    both = average_power(block, ActivityWindow("b", joined, mode), 2 * frame, CLK) * 2 * frame / CLK
    assert both == pytest.approx(e1 + e2, rel=1e-9, abs=1e-30)
