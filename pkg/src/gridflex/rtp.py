"""Decentralized real-time-pricing charging strategy.

At plug-in an EV plans its whole session once: it ranks the hours before
departure by total electricity price (spot + tariff) and fills the cheapest
ones at full power, producing the per-minute schedule it submits to the
aggregator. Charging is on/off at max power except a single trimming minute
that makes the delivered energy exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: energies below this are treated as zero, kWh
ENERGY_EPS_KWH = 1e-9


@dataclass
class ChargingSchedule:
    """Per-minute charging power over one plug-in session.

    ``start`` is the plug-in minute on the simulation grid; ``power[k]`` is
    the power during minute ``start + k``. The array spans exactly
    [plug-in, departure).
    """

    start: int
    power: np.ndarray

    @property
    def end(self) -> int:
        return self.start + len(self.power)

    def energy_kwh(self) -> float:
        return float(self.power.sum()) / 60.0

    def energy_from(self, minute: int) -> float:
        """Energy still scheduled at or after ``minute``."""
        k = max(0, int(minute) - self.start)
        if k >= len(self.power):
            return 0.0
        return float(self.power[k:].sum()) / 60.0

    def copy(self) -> "ChargingSchedule":
        return ChargingSchedule(self.start, self.power.copy())

    def blocks(self) -> list[tuple[int, int, float]]:
        """Maximal constant-power runs as (start minute, n minutes, kW), skipping zeros."""
        p = self.power
        if len(p) == 0:
            return []
        edges = np.flatnonzero(np.diff(p) != 0.0) + 1
        bounds = np.concatenate(([0], edges, [len(p)]))
        return [
            (self.start + int(a), int(b - a), float(p[a]))
            for a, b in zip(bounds[:-1], bounds[1:])
            if p[a] != 0.0
        ]


def build_rtp_schedule(
    plug_in: int,
    departure: int,
    energy_kwh: float,
    max_power_kw: float,
    hour_prices: np.ndarray,
) -> ChargingSchedule:
    """Plan a session by greedily filling the cheapest hours before departure.

    Hours overlapping [plug_in, departure) are sorted by total price
    (ties: earlier hour first). Each chosen hour is filled at max power from
    the start of the EV's availability within it; the final minute is trimmed
    so the delivered energy is exact. If the window cannot hold the requested
    energy the whole window is scheduled at max power.

    Args:
        plug_in: session start, minutes on the simulation grid.
        departure: session end (exclusive), minutes.
        energy_kwh: requested energy, >= 0.
        max_power_kw: the EV's charging power, > 0.
        hour_prices: total price per grid hour, DKK/kWh, indexed by hour.

    Returns:
        ChargingSchedule spanning [plug_in, departure).
    """
    if departure <= plug_in:
        raise ValueError("departure must be after plug-in")
    if energy_kwh < 0:
        raise ValueError("energy must be >= 0")
    if max_power_kw <= 0:
        raise ValueError("max power must be > 0")

    n_minutes = departure - plug_in
    power = np.zeros(n_minutes, dtype=np.float64)
    schedule = ChargingSchedule(plug_in, power)
    if energy_kwh <= ENERGY_EPS_KWH:
        return schedule

    first_hour = plug_in // 60
    last_hour = (departure - 1) // 60
    hours = sorted(range(first_hour, last_hour + 1), key=lambda h: (hour_prices[h], h))

    e_per_min = max_power_kw / 60.0
    remaining = energy_kwh
    for h in hours:
        lo = max(plug_in, h * 60)
        hi = min(departure, (h + 1) * 60)
        avail = hi - lo
        if avail <= 0 or remaining <= ENERGY_EPS_KWH:
            continue
        full = int(remaining / e_per_min + 1e-12)
        if full >= avail:
            power[lo - plug_in : hi - plug_in] = max_power_kw
            remaining -= avail * e_per_min
        else:
            power[lo - plug_in : lo - plug_in + full] = max_power_kw
            remaining -= full * e_per_min
            if remaining > ENERGY_EPS_KWH:
                power[lo - plug_in + full] = remaining * 60.0  # trimming minute
                remaining = 0.0
        if remaining <= ENERGY_EPS_KWH:
            break
    return schedule


def schedule_cost_dkk(schedule: ChargingSchedule, minute_prices: np.ndarray) -> float:
    """Session cost against a per-minute price expansion, DKK."""
    seg = minute_prices[schedule.start : schedule.end]
    return float(np.dot(schedule.power, seg)) / 60.0
