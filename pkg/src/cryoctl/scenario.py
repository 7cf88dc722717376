"""Scenario loading and the full control -> plant -> readout -> feedback loop."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import awg, fdma, power
from .discriminator import (CalibrationData, Discriminator, build_discriminator, calibrate,
                            discriminate, fidelity_analytic, fidelity_monte_carlo, mac_score,
                            optimal_window, separation_ratio)
from .errors import ConfigError, CryoCtlError
from .readout import (AdcSpec, MatchingChoice, QubitReadoutModel, ReadoutCascade,
                      cascade_bandwidth_hz, cascade_gain_db, cascade_nf_db, matching_params,
                      projected_statistics, settling_trajectories, simulate_shot, simulate_shots,
                      stage_from_dict)
from .sequencer import (ClockDomain, ClockTree, FeedbackConfig, Program, Pulse, monitor_sync,
                        parse_program, run_program)
from .signals import IqTrace, QuantizerSpec, RngStream

log = logging.getLogger(__name__)

SCENARIO_DIR = Path(__file__).parent / "scenarios"

# runtime measurement shots draw from rows far past any calibration batch
_RUNTIME_SHOT_BASE = 1 << 40


def shipped_scenario(name: str) -> Path:
    path = SCENARIO_DIR / f"{name}.yaml"
    if not path.exists():
        raise FileNotFoundError(f"no shipped scenario named {name!r}")
    return path


def resolve_config_path(arg: str) -> Path:
    """Accept a file path or the name of a shipped scenario."""
    p = Path(arg)
    if p.exists():
        return p
    if p.suffix == "" and (SCENARIO_DIR / f"{arg}.yaml").exists():
        return SCENARIO_DIR / f"{arg}.yaml"
    raise FileNotFoundError(f"config file not found: {arg}")


class _Section:
    """Maps malformed config values to ConfigError tagged with a module name."""

    def __init__(self, module):
        self.module = module

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type in (KeyError, TypeError, ValueError, AttributeError) and not isinstance(exc, CryoCtlError):
            detail = f"missing field {exc.args[0]!r}" if exc_type is KeyError else str(exc)
            raise ConfigError(f"invalid configuration: {detail}", self.module) from exc
        if isinstance(exc, CryoCtlError) and exc.module == "core":
            exc.module = self.module
        return False


@dataclass
class DiscriminatorSettings:
    calibrate_shots: int = 20000
    window: Any = "optimal"
    monte_carlo_shots: int = 20000


@dataclass
class PlantSettings:
    flip_waves: tuple = ("x180",)
    parity_ancillas: dict = field(default_factory=dict)


@dataclass
class Scenario:
    path: Path
    raw: dict
    seed: int
    clock_tree: ClockTree
    program: Program | None = None
    memory: awg.WaveformMemory | None = None
    dds: awg.DdsConfig | None = None
    dds_amplitude_v: float = 0.02
    lo: awg.LoSpec | None = None
    model: QubitReadoutModel | None = None
    cascade: ReadoutCascade | None = None
    identical_single_pole: bool = False
    matching: MatchingChoice = MatchingChoice.OHM500
    adc: AdcSpec = field(default_factory=AdcSpec)
    disc: DiscriminatorSettings = field(default_factory=DiscriminatorSettings)
    plant: PlantSettings = field(default_factory=PlantSettings)
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    sync: dict = field(default_factory=dict)
    power: dict | None = None
    fdma: dict | None = None

    def require(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(f"scenario lacks a {name!r} section", "cli-harness")


def _clock_tree(raw: dict) -> ClockTree:
    with _Section("sequencer"):
        sec = raw.get("clock_tree", {}) or {}
        kwargs = {}
        if "system_clock_hz" in sec:
            kwargs["system_clock_hz"] = float(sec["system_clock_hz"])
        if "domains" in sec:
            kwargs["domains"] = tuple(ClockDomain(str(k), Fraction(str(v))) for k, v in sec["domains"].items())
        if "block_domains" in sec:
            kwargs["block_domains"] = {str(k): str(v) for k, v in sec["block_domains"].items()}
        if "blocks" in sec:
            kwargs["blocks"] = tuple(str(b) for b in sec["blocks"])
        return ClockTree(**kwargs)


def _model(sec: dict) -> QubitReadoutModel:
    with _Section("readout"):
        n_bins = int(sec.get("n_bins", 15))
        bin_s = float(sec["bin_duration_s"])
        traj = sec.get("trajectories", {"kind": "settling"})
        if traj.get("kind", "settling") == "settling":
            kw = {k: float(v) for k, v in traj.items() if k != "kind"}
            m0, m1 = settling_trajectories(n_bins, bin_s, **kw)
        elif traj["kind"] == "explicit":
            m0 = np.array([complex(v) for v in traj["m0"]])
            m1 = np.array([complex(v) for v in traj["m1"]])
        else:
            raise ConfigError(f"unknown trajectory kind {traj['kind']!r}", "readout")
        sigma = sec.get("sigma_in_v", 0.0)
        sigma = np.array(sigma, dtype=float) if isinstance(sigma, list) else float(sigma)
        return QubitReadoutModel(m0, m1, sigma, bin_s, float(sec.get("f_readout_hz", 6e9)))


def _cascade(sec: dict, matching: MatchingChoice) -> ReadoutCascade:
    with _Section("readout"):
        stages = []
        for entry in sec["stages"]:
            if entry == "matching":
                stages.append(matching_params(matching))
            else:
                stages.append(stage_from_dict(entry))
        return ReadoutCascade(stages)


def load_scenario(path, seed: int | None = None) -> Scenario:
    """Parse and validate a scenario file; referenced files resolve relative to it."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config: {exc}", "cli-harness") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping", "cli-harness")
    base = path.parent
    if seed is None:
        if "seed" not in raw:
            raise ConfigError("scenario must set a seed", "cli-harness")
        seed = raw["seed"]
    with _Section("cli-harness"):
        seed = int(seed)
    sc = Scenario(path=path, raw=raw, seed=seed, clock_tree=_clock_tree(raw))

    if "program" in raw:
        prog_path = base / raw["program"]
        if not prog_path.exists():
            raise FileNotFoundError(f"program file not found: {prog_path}")
        sc.program = parse_program(prog_path.read_text())
    if "waveforms" in raw:
        wave_path = base / raw["waveforms"]
        if not wave_path.exists():
            raise FileNotFoundError(f"waveform file not found: {wave_path}")
        with _Section("awg"):
            sc.memory = awg.WaveformMemory.from_csv(wave_path)
    with _Section("awg"):
        d = raw.get("dds", {}) or {}
        cfg = awg.DdsConfig(0, int(d.get("acc_width_bits", 32)), float(d.get("sample_clock_hz", 5e9)))
        sc.dds = cfg.tuned(float(d.get("carrier_hz", 0.0)))
        sc.dds_amplitude_v = float(d.get("amplitude_v", 0.02))
        if "lo" in raw:
            sc.lo = awg.LoSpec(float(raw["lo"]["lo_freq_hz"]), float(raw["lo"].get("phase_jitter_rms_rad", 0.0)))
    if "matching" in raw:
        with _Section("readout"):
            sc.matching = MatchingChoice(raw["matching"])
    if "qubit" in raw:
        sc.model = _model(raw["qubit"])
    if "cascade" in raw:
        sc.cascade = _cascade(raw["cascade"], sc.matching)
        sc.identical_single_pole = bool(raw["cascade"].get("identical_single_pole", False))
        cascade_bandwidth_hz(sc.cascade, sc.identical_single_pole)
    if "adc" in raw:
        with _Section("readout"):
            a = raw["adc"]
            sc.adc = AdcSpec(float(a.get("sample_rate_hz", 500e6)),
                             QuantizerSpec(int(a.get("bits", 12)), float(a.get("full_scale_v", 1.0))))
    with _Section("discriminator"):
        d = raw.get("discriminator", {}) or {}
        sc.disc = DiscriminatorSettings(int(d.get("calibrate_shots", 20000)), d.get("window", "optimal"),
                                        int(d.get("monte_carlo_shots", 20000)))
        if sc.disc.calibrate_shots < 2:
            raise ConfigError("calibrate_shots must be >= 2", "discriminator")
    with _Section("sequencer"):
        p = raw.get("plant", {}) or {}
        sc.plant = PlantSettings(tuple(p.get("flip_waves", ["x180"])),
                                 {int(k): tuple(int(q) for q in v)
                                  for k, v in (p.get("parity_ancillas", {}) or {}).items()})
        f = raw.get("feedback", {}) or {}
        sc.feedback = FeedbackConfig(
            decode_latency_cycles=int(f.get("decode_latency_cycles", 4)),
            correction_wave=str(f.get("correction_wave", "x180")),
            correction_len_cycles=int(f.get("correction_len_cycles", 20)),
            recal_shots=int(f.get("recal_shots", 1000)))
        s = raw.get("sync", {}) or {}
        sc.sync = {"interval_cycles": int(s.get("interval_cycles", 10_000)),
                   "tolerance_cycles": float(s.get("tolerance_cycles", 1)),
                   "horizon_cycles": int(s.get("horizon_cycles", 1_000_000)),
                   "drift_ppm": {str(k): float(v) for k, v in (s.get("drift_ppm", {}) or {}).items()}}
    if "power" in raw:
        sc.power = _power_section(raw["power"], sc)
    if "fdma" in raw:
        with _Section("fdma"):
            f = raw["fdma"]
            band = fdma.Band(float(f["band_hz"][0]), float(f["band_hz"][1]))
            sc.fdma = {"band": band, "channel_bw_hz": float(f["channel_bw_hz"]),
                       "guard_hz": float(f.get("guard_hz", 0.0)), "n_qubits": int(f["n_qubits"]),
                       "rolloff_exponent": float(f.get("rolloff_exponent", 2.0)),
                       "control": bool(f.get("control", False))}
            if sc.fdma["channel_bw_hz"] <= 0:
                raise ConfigError("channel bandwidth must be positive", "fdma")
    return sc


def _power_section(sec: dict, sc: Scenario) -> dict:
    with _Section("power"):
        blocks = {}
        for b in sec["blocks"]:
            if b.get("from_cascade"):
                if sc.cascade is None:
                    raise ConfigError(f"block {b['name']!r} needs a cascade section", "power")
                blocks[b["name"]] = power.BlockPower(b["name"], sc.cascade.dc_power_w, 0.0,
                                                     shared=bool(b.get("shared", False)))
            else:
                blocks[b["name"]] = power.BlockPower(
                    str(b["name"]), float(b["p_leak_w"]), float(b["p_dyn_w"]),
                    int(b.get("wake_latency_cycles", 0)), float(b.get("wake_energy_j", 0.0)),
                    bool(b.get("shared", False)))
        policy = {str(k): power.GatingPolicy(power.GatingMode(v.get("mode", "None")),
                                             int(v.get("margin_cycles", 0)))
                  for k, v in (sec.get("policy", {}) or {}).items()}
        activity = {str(k): tuple(tuple(int(c) for c in iv) for iv in v)
                    for k, v in (sec.get("activity", {}) or {}).items()}
        frame = int(sec["frame_cycles"])
        if frame <= 0:
            raise ConfigError("frame_cycles must be positive", "power")
        mux = int(sec.get("multiplex_ratio", 1))
        if mux < 1:
            raise ConfigError("multiplex_ratio must be >= 1", "power")
        return {"blocks": blocks, "policy": policy, "activity": activity, "frame_cycles": frame,
                "multiplex_ratio": mux, "window_gating": bool(sec.get("window_gating", False)),
                "assumptions": tuple(str(a) for a in sec.get("assumptions", []) or [])}


# ----------------------------------------------------------------------------------------------
# loop pieces


def calibrate_plant(sc: Scenario, n_shots: int | None = None, first_shot: int = 0):
    """Simulated calibration shots -> (CalibrationData, Discriminator, shots0, shots1)."""
    sc.require("model", "cascade")
    n = sc.disc.calibrate_shots if n_shots is None else n_shots
    shots0 = simulate_shots(sc.model, 0, sc.cascade, sc.adc, sc.seed, n, first_shot)
    shots1 = simulate_shots(sc.model, 1, sc.cascade, sc.adc, sc.seed, n, first_shot)
    cal = calibrate(shots0, shots1)
    if sc.disc.window == "optimal":
        window = optimal_window(cal)
    elif sc.disc.window == "full":
        window = (0, cal.n_bins - 1)
    else:
        with _Section("discriminator"):
            window = (int(sc.disc.window[0]), int(sc.disc.window[1]))
    return cal, build_discriminator(cal, window), shots0, shots1


class QubitPlant:
    """Classical bit-flip plant: flip-wave pulses toggle a channel's state;
    ancilla channels read the parity of their data qubits."""

    def __init__(self, sc: Scenario, disc: Discriminator):
        self.sc = sc
        self.disc = disc
        self.states: dict[int, int] = {}
        self.n_measured = 0
        self.readings = []

    def on_pulse(self, p: Pulse):
        if p.wave_id in self.sc.plant.flip_waves:
            self.states[p.channel] = self.states.get(p.channel, 0) ^ 1

    def true_state(self, channel: int) -> int:
        data = self.sc.plant.parity_ancillas.get(channel)
        if data is None:
            return self.states.get(channel, 0)
        bit = 0
        for q in data:
            bit ^= self.states.get(q, 0)
        return bit

    def measure(self, ins, cycle) -> int:
        state = self.true_state(ins.channel)
        x = simulate_shot(self.sc.model, state, self.sc.cascade, self.sc.adc, self.sc.seed,
                          _RUNTIME_SHOT_BASE + self.n_measured)
        self.n_measured += 1
        bit = discriminate(mac_score(x, self.disc), self.disc.threshold)
        self.readings.append({"cycle": cycle, "channel": ins.channel, "true": state, "read": int(bit)})
        return bit


def gate_to_window(windows: dict, timeline, sc: Scenario, disc: Discriminator) -> dict:
    """Restrict discriminator activity to the optimal bins inside each measurement."""
    bin_cycles = sc.model.bin_duration_s * sc.clock_tree.system_clock_hz
    a, b = disc.window
    frame = sc.power["frame_cycles"]
    out = dict(windows)
    for name, act in windows.items():
        if not name.startswith("disc"):
            continue
        spans = []
        for ev in timeline:
            if ev.target_block == name and ev.kind == "measure_begin":
                lo = ev.cycle + math.floor(a * bin_cycles)
                hi = ev.cycle + math.ceil((b + 1) * bin_cycles)
                spans.append((lo, min(hi, frame)))
        out[name] = power.ActivityWindow(name, tuple(power.merge_intervals(spans)), act.mode)
    return out


def build_power_report(sc: Scenario, timeline=(), disc: Discriminator | None = None,
                       mode_override: power.GatingMode | None = None) -> power.PowerReport:
    sc.require("power")
    p = sc.power
    policy = dict(p["policy"])
    if mode_override is not None:
        policy = {k: replace(v, mode=mode_override) for k, v in policy.items()}
    windows = power.schedule_gating(list(timeline), policy, p["blocks"], p["frame_cycles"])
    if p["window_gating"] and disc is not None and sc.model is not None:
        windows = gate_to_window(windows, timeline, sc, disc)
    for name, ivs in p["activity"].items():
        mode = policy.get(name, power.GatingPolicy()).mode
        windows[name] = power.ActivityWindow(name, ivs, mode)
    return power.power_report(p["blocks"], windows, p["frame_cycles"],
                              sc.clock_tree.system_clock_hz, p["multiplex_ratio"], p["assumptions"])


def fdma_summary(sc: Scenario) -> tuple[fdma.ChannelPlan, dict]:
    sc.require("fdma")
    f = sc.fdma
    plan = fdma.allocate(f["n_qubits"], f["band"], f["channel_bw_hz"], f["guard_hz"])
    xt = fdma.crosstalk_db(plan, f["rolloff_exponent"])
    off = xt[~np.eye(len(plan.centers_hz), dtype=bool)]
    summary = {
        "capacity": fdma.capacity(f["band"], f["channel_bw_hz"], f["guard_hz"]),
        "n_qubits": f["n_qubits"],
        "centers_hz": [float(c) for c in plan.centers_hz],
        "channel_bw_hz": f["channel_bw_hz"],
        "guard_hz": f["guard_hz"],
        "worst_leakage_db": float(off.max()) if off.size else None,
        "warnings": [fdma.CROSS_RESONANCE_WARNING] if f["control"] else [],
    }
    return plan, summary


def matching_summary() -> dict:
    s50 = matching_params(MatchingChoice.OHM50)
    s500 = matching_params(MatchingChoice.OHM500)
    return {
        "Ohm50": {"dc_power_w": s50.dc_power_w, "gain_db": s50.gain_db, "r_f_ohm": s50.meta.get("r_f_ohm")},
        "Ohm500": {"dc_power_w": s500.dc_power_w, "gain_db": s500.gain_db, "r_f_ohm": s500.meta.get("r_f_ohm"),
                   "nf_db": s500.nf_db, "bw_hz": s500.bw_hz},
        "gain_delta_db": s500.gain_db - s50.gain_db,
        "power_ratio": s50.dc_power_w / s500.dc_power_w,
        "note": "published claim: ~10x reduction in power with the 500 ohm match "
                f"(table values give {s50.dc_power_w / s500.dc_power_w:.2f}x)",
    }


def cascade_summary(sc: Scenario) -> dict:
    c = sc.cascade
    return {
        "stages": [s.name for s in c],
        "gain_db": cascade_gain_db(c),
        "nf_db": cascade_nf_db(c),
        "bandwidth_hz": cascade_bandwidth_hz(c, sc.identical_single_pole),
        "dc_power_w": c.dc_power_w,
        "assumed_stages": [s.name for s in c if s.meta.get("assumption")],
    }


def _first_pulse_trace(sc: Scenario) -> IqTrace | None:
    if sc.memory is None or sc.program is None:
        return None
    for ins in sc.program.instructions:
        if isinstance(ins, Pulse) and ins.wave_id in sc.memory:
            return awg.play_pulse(sc.memory, ins.wave_id, sc.dds,
                                  sc.dds_amplitude_v * ins.amp_scale, ins.phase_rad)
    return None


def _check_waveforms(sc: Scenario):
    for ins in sc.program.instructions:
        if isinstance(ins, Pulse) and ins.wave_id not in sc.memory:
            raise ConfigError(f"program references unknown waveform {ins.wave_id!r}", "awg")
    if sc.feedback.correction_wave not in sc.memory:
        raise ConfigError(f"correction waveform {sc.feedback.correction_wave!r} not in memory", "awg")


def awg_summary(sc: Scenario) -> dict:
    cfg = sc.dds
    out = {"ftw": cfg.ftw, "acc_width_bits": cfg.acc_width_bits, "sample_clock_hz": cfg.sample_clock_hz,
           "achieved_hz": cfg.frequency_hz,
           "resolution_hz": cfg.sample_clock_hz / cfg.modulus}
    if sc.lo is not None:
        n = int(sc.raw.get("sweep", {}).get("jitter_carrier_samples", 65536))
        tone = awg.dds_carrier(cfg, n)
        _, penalty = awg.lo_upconvert_and_snr_penalty(tone, sc.lo, RngStream.named(sc.seed, "awg.lo"))
        out["lo_phase_jitter_rms_rad"] = sc.lo.phase_jitter_rms_rad
        out["lo_snr_penalty_db"] = penalty
    return out


# ----------------------------------------------------------------------------------------------


@dataclass
class RunResult:
    report: dict
    files: dict  # file name -> text content


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def simulate(sc: Scenario) -> RunResult:
    """Run the full loop for one frame and collect reports."""
    sc.require("program", "memory", "model", "cascade", "power")
    _check_waveforms(sc)
    cal, disc, shots0, shots1 = calibrate_plant(sc)
    plant = QubitPlant(sc, disc)
    recals = []

    def recal(shots):
        # fresh shot rows beyond the initial calibration batch
        c2, d2, _, _ = calibrate_plant(sc, shots, sc.disc.calibrate_shots * (len(recals) + 1))
        recals.append({"shots": shots, "window": list(d2.window),
                       "fidelity": fidelity_analytic(c2, d2).fidelity})

    trace = run_program(sc.program, sc.clock_tree, plant.measure, recal, sc.feedback, plant.on_pulse)
    timeline = trace.events
    fid = fidelity_analytic(cal, disc)
    mc = fidelity_monte_carlo(sc.model, sc.cascade, sc.adc, disc, sc.disc.monte_carlo_shots, sc.seed)
    preport = build_power_report(sc, timeline, disc)
    checks = monitor_sync(sc.clock_tree, sc.sync["horizon_cycles"], sc.sync["drift_ppm"],
                          sc.sync["interval_cycles"], sc.sync["tolerance_cycles"])
    last = checks[-1]
    lat = trace.feedback_latencies
    report = {
        "scenario": sc.path.stem,
        "seed": sc.seed,
        "fidelity": fid.fidelity,
        "fidelity_monte_carlo": {"value": mc.fidelity, "ci95": list(mc.interval), "shots_per_state": mc.n_shots},
        "separation_ratio": separation_ratio(cal, disc),
        "window": list(disc.window),
        "threshold": disc.threshold,
        "power": preport.to_dict(),
        "sync": {"in_sync": all(c.in_sync for c in checks), "max_skew_cycles": max(c.max_counter_skew_cycles for c in checks),
                 "last_check_cycle": last.last_check_cycle, "checks": len(checks),
                 "tolerance_cycles": sc.sync["tolerance_cycles"]},
        "feedback": {"latencies_cycles": lat, "latency_constant": len(set(lat)) <= 1,
                     "corrections": [{"channel": p.channel, "at": p.start_cycle} for p in trace.corrections],
                     "measured_bits": trace.measured_bits, "readings": plant.readings,
                     "final_states": {str(k): v for k, v in sorted(plant.states.items())}},
        "fsm_states": [s.value for s in trace.states],
        "recalibrations": recals,
        "cascade": cascade_summary(sc),
        "matching": matching_summary(),
        "awg": awg_summary(sc),
    }
    files = {
        "timeline.csv": trace.timeline_csv(),
        "power.csv": preport.to_csv(),
    }
    if sc.fdma is not None:
        plan, summary = fdma_summary(sc)
        report["fdma"] = summary
        files["fdma_plan.csv"] = plan.to_csv()
    pulse = _first_pulse_trace(sc)
    if pulse is not None:
        files["awg_trace.csv"] = _trace_csv(pulse)
    report["consistency"] = consistency_checks(report)
    files["report.json"] = dump_json(report)
    return RunResult(report, files)


def _trace_csv(trace: IqTrace) -> str:
    lines = ["index,t_s,i_v,q_v"]
    for k, (t, v) in enumerate(zip(trace.times, trace.samples)):
        lines.append(f"{k},{float(t)!r},{float(v.real)!r},{float(v.imag)!r}")
    return "\n".join(lines) + "\n"


def consistency_checks(report: dict) -> dict:
    p = report["power"]
    block_sum = sum(b["avg_w"] for b in p["blocks"])
    return {
        "power_additive": math.isclose(block_sum, p["total_w"], rel_tol=1e-12, abs_tol=0.0),
        "fidelity_in_unit_interval": 0.0 <= report["fidelity"] <= 1.0,
        "duties_in_unit_interval": all(0.0 <= b["duty"] <= 1.0 for b in p["blocks"]),
        "in_sync": bool(report["sync"]["in_sync"]),
    }


def calibrate_only(sc: Scenario) -> RunResult:
    cal, disc, shots0, shots1 = calibrate_plant(sc)
    fid = fidelity_analytic(cal, disc)
    report = {"scenario": sc.path.stem, "seed": sc.seed, "window": list(disc.window),
              "threshold": disc.threshold, "fidelity": fid.fidelity,
              "separation_ratio": separation_ratio(cal, disc), "shots_per_state": cal.n0}
    rows = ["state,shot,bin,value"]
    for state, shots in ((0, shots0), (1, shots1)):
        for i, row in enumerate(shots):
            rows.extend(f"{state},{i},{k},{float(v)!r}" for k, v in enumerate(row))
    disc_rows = ["key,value", f"start_bin,{disc.start_bin}", f"end_bin,{disc.end_bin}",
                 f"threshold,{float(disc.threshold).hex()}"]
    disc_rows += [f"w{k},{float(w).hex()}" for k, w in enumerate(disc.weights)]
    return RunResult(report, {"calibration.csv": "\n".join(rows) + "\n",
                              "discriminator.csv": "\n".join(disc_rows) + "\n",
                              "calibration.json": dump_json(report)})


def power_only(sc: Scenario, mode_override=None) -> RunResult:
    timeline = []
    disc = None
    if sc.program is not None:
        if sc.power.get("window_gating") and sc.model is not None and sc.cascade is not None:
            _, disc, _, _ = calibrate_plant(sc)
        timeline = run_program(sc.program, sc.clock_tree, config=sc.feedback).events
    rep = build_power_report(sc, timeline, disc, mode_override)
    return RunResult(rep.to_dict(), {"power.json": dump_json(rep.to_dict()), "power.csv": rep.to_csv()})


def fdma_only(sc: Scenario) -> RunResult:
    plan, summary = fdma_summary(sc)
    return RunResult(summary, {"fdma_plan.json": dump_json(summary), "fdma_plan.csv": plan.to_csv()})


# ----------------------------------------------------------------------------------------------
# sweeps

SWEEPABLE = ("snr", "duty", "multiplex", "jitter", "matching")


def _analytic_at(sc: Scenario, model: QubitReadoutModel, cascade, window=None):
    mu0, mu1, s = projected_statistics(model, cascade, sc.adc)
    cal = CalibrationData(mu0, mu1, s, 2, 2)
    if window is None:
        window = optimal_window(cal)
    d = build_discriminator(cal, window)
    return cal, d, fidelity_analytic(cal, d).fidelity


def _static_power(sc: Scenario, disc: Discriminator | None) -> power.PowerReport:
    timeline = []
    if sc.program is not None:
        timeline = run_program(sc.program, sc.clock_tree, config=sc.feedback).events
    return build_power_report(sc, timeline, disc)


def sweep(sc: Scenario, parameter: str, values: list[str]) -> tuple[list[str], list[list]]:
    """Rows of (value, fidelity, power_w, extra) in input order.

    Fidelities come from the analytic score model of the configured
    plant, so sweeps are cheap and exactly reproducible.
    """
    if parameter not in SWEEPABLE:
        raise KeyError(parameter)
    if not values:
        raise ValueError("empty value list")
    sc.require("model", "cascade")
    _, base_d, base_fid = _analytic_at(sc, sc.model, sc.cascade)
    rows = []
    if parameter == "snr":
        header = ["snr", "fidelity", "power_w", "separation_ratio"]
        mu0, mu1, s = projected_statistics(sc.model, sc.cascade, sc.adc)
        cal = CalibrationData(mu0, mu1, s, 2, 2)
        full = build_discriminator(cal)
        r0 = separation_ratio(cal, full)
        pw = _static_power(sc, base_d).total_w if sc.power else float("nan")
        for v in values:
            target = float(v)
            m = sc.model.scaled(target / r0)
            cal2, d2, f = _analytic_at(sc, m, sc.cascade, (0, cal.n_bins - 1))
            rows.append([target, f, pw, separation_ratio(cal2, d2)])
    elif parameter == "duty":
        header = ["duty", "fidelity", "power_w", "block"]
        sc.require("power")
        name, block = next((n, b) for n, b in sc.power["blocks"].items() if n.startswith("disc"))
        frame = 1_000_000
        for v in values:
            duty = float(v)
            if not 0 <= duty <= 1:
                raise ConfigError(f"duty {duty} outside [0, 1]", "power")
            act = power.ActivityWindow(name, ((0, round(duty * frame)),) if duty > 0 else (),
                                       power.GatingMode.CLOCK_GATED)
            rows.append([duty, base_fid, power.average_power(block, act, frame, sc.clock_tree.system_clock_hz), name])
    elif parameter == "multiplex":
        header = ["multiplex", "fidelity", "power_w", "total_w"]
        sc.require("power")
        rep = _static_power(sc, base_d)
        for v in values:
            m = int(v)
            rows.append([m, base_fid, power.per_qubit_budget(rep, m), rep.total_w])
    elif parameter == "jitter":
        header = ["jitter", "fidelity", "power_w", "snr_penalty_db"]
        n = int(sc.raw.get("sweep", {}).get("jitter_carrier_samples", 65536))
        tone = awg.dds_carrier(sc.dds, n)
        lo_f = sc.lo.lo_freq_hz if sc.lo else 0.0
        pw = _static_power(sc, base_d).total_w if sc.power else float("nan")
        for v in values:
            j = float(v)
            _, pen = awg.lo_upconvert_and_snr_penalty(tone, awg.LoSpec(lo_f, j), RngStream.named(sc.seed, "awg.lo"))
            # coherent amplitude loss shrinks the state separation
            m = sc.model.scaled(10 ** (-pen / 20))
            _, _, f = _analytic_at(sc, m, sc.cascade, base_d.window)
            rows.append([j, f, pw, pen])
    else:
        header = ["matching", "fidelity", "power_w", "gain_db"]
        raw_stages = sc.raw["cascade"]["stages"]
        for v in values:
            choice = MatchingChoice(v)
            cascade = _cascade({"stages": raw_stages}, choice)
            _, _, f = _analytic_at(sc, sc.model, cascade)
            stage = matching_params(choice)
            rows.append([choice.value, f, stage.dc_power_w, stage.gain_db])
    return header, rows


def sweep_csv(header, rows) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in r))
    return "\n".join(lines) + "\n"
