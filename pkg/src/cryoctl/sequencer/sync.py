"""Clock-domain counter skew monitoring."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .timeline import ClockTree

DEFAULT_TOLERANCE_CYCLES = 1
DEFAULT_INTERVAL_CYCLES = 10_000


@dataclass(frozen=True)
class SyncStatus:
    in_sync: bool
    max_counter_skew_cycles: float
    last_check_cycle: int
    worst_domain: str | None = None


def expected_count(tree: ClockTree, domain: str, system_cycle: int) -> Fraction:
    return system_cycle * tree.domain(domain).ratio


def check_sync(domain_counters: Mapping[str, int], tree: ClockTree, system_cycle: int,
               tolerance_cycles: float = DEFAULT_TOLERANCE_CYCLES) -> SyncStatus:
    """Compare domain counters sampled at ``system_cycle``.

    Each counter's deviation from its ideal count is rescaled to system
    cycles; skew is the widest spread among those deviations and the
    system counter itself.
    """
    devs = {"system": Fraction(0)}
    for name, count in domain_counters.items():
        ratio = tree.domain(name).ratio
        devs[name] = Fraction(count) / ratio - system_cycle
    hi = max(devs.values())
    lo = min(devs.values())
    skew = hi - lo
    worst = max(devs, key=lambda n: (abs(devs[n]), n))
    return SyncStatus(skew <= tolerance_cycles, float(skew), system_cycle,
                      worst if skew else None)


def drifted_counters(tree: ClockTree, system_cycle: int,
                     drift_ppm: Mapping[str, float] | None = None) -> dict[str, int]:
    """Integer counter values of every domain after ``system_cycle`` cycles."""
    drift_ppm = drift_ppm or {}
    out = {}
    for dom in tree.domains:
        scale = 1 + Fraction(drift_ppm.get(dom.name, 0)) / 1_000_000
        out[dom.name] = math.floor(system_cycle * dom.ratio * scale)
    return out


def monitor_sync(tree: ClockTree, n_cycles: int,
                 drift_ppm: Mapping[str, float] | None = None,
                 interval_cycles: int = DEFAULT_INTERVAL_CYCLES,
                 tolerance_cycles: float = DEFAULT_TOLERANCE_CYCLES) -> list[SyncStatus]:
    """Periodic sync checks every ``interval_cycles`` up to ``n_cycles``."""
    checks = list(range(interval_cycles, n_cycles + 1, interval_cycles))
    if not checks or checks[-1] != n_cycles:
        checks.append(n_cycles)
    return [check_sync(drifted_counters(tree, c, drift_ppm), tree, c, tolerance_cycles)
            for c in checks]
