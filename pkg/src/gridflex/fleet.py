"""EV fleet: specs, stochastic daily driving behavior, and battery state.

Each EV plugs out once in the morning and back in once in the afternoon
(one trip per day). Departure and arrival times come from truncated normal
distributions, the daily distance from a discrete probability table. All
sampling is deterministic per (seed, ev id): every EV draws from its own
independent substream.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from .timeseries import DataError

#: household connection limit, kW (3 x 25 A)
HOUSEHOLD_POWER_CAP_KW = 17.3
MIN_CHARGE_POWER_KW = 7.2

#: numerical guard for the strict SoC comparison at departure, kWh
SOC_EPS_KWH = 1e-9

#: daily one-way-equivalent driving distances, km -> probability (mean ~41.9 km)
DEFAULT_DISTANCE_TABLE = (
    (10.0, 0.16),
    (20.0, 0.19),
    (30.0, 0.17),
    (40.0, 0.14),
    (50.0, 0.11),
    (60.0, 0.08),
    (80.0, 0.07),
    (100.0, 0.04),
    (130.0, 0.025),
    (160.0, 0.01),
    (200.0, 0.005),
)


@dataclass(frozen=True)
class EvSpec:
    """Static vehicle parameters."""

    id: int
    battery_capacity_kwh: float
    max_charge_power_kw: float
    consumption_kwh_per_km: float

    def __post_init__(self):
        if self.battery_capacity_kwh <= 0:
            raise ValueError(f"EV {self.id}: battery capacity must be > 0")
        if self.consumption_kwh_per_km <= 0:
            raise ValueError(f"EV {self.id}: consumption must be > 0")
        if not MIN_CHARGE_POWER_KW <= self.max_charge_power_kw <= HOUSEHOLD_POWER_CAP_KW:
            raise ValueError(
                f"EV {self.id}: max charge power {self.max_charge_power_kw} kW outside "
                f"[{MIN_CHARGE_POWER_KW}, {HOUSEHOLD_POWER_CAP_KW}] kW"
            )


@dataclass(frozen=True)
class TruncatedNormal:
    """Truncated normal over minutes of day, sampled by inverse CDF."""

    mean_minute: float
    sd_minutes: float
    lo_minute: float
    hi_minute: float

    def __post_init__(self):
        if not self.lo_minute < self.hi_minute:
            raise ValueError("truncation bounds must satisfy lo < hi")
        if self.sd_minutes <= 0:
            raise ValueError("sd must be > 0")

    def ppf(self, u):
        """Map uniform draws in [0,1) to truncated-normal minutes of day."""
        a = ndtr((self.lo_minute - self.mean_minute) / self.sd_minutes)
        b = ndtr((self.hi_minute - self.mean_minute) / self.sd_minutes)
        x = self.mean_minute + self.sd_minutes * ndtri(a + (b - a) * np.asarray(u))
        return np.clip(x, self.lo_minute, self.hi_minute)


@dataclass(frozen=True)
class BehaviorModel:
    """Daily driving behavior: departure/arrival times and distance."""

    departure: TruncatedNormal = TruncatedNormal(7 * 60 + 30, 60.0, 5 * 60, 10 * 60)
    arrival: TruncatedNormal = TruncatedNormal(16 * 60 + 30, 90.0, 13 * 60, 21 * 60)
    distance_table: tuple[tuple[float, float], ...] = DEFAULT_DISTANCE_TABLE

    def __post_init__(self):
        if self.departure.hi_minute > self.arrival.lo_minute:
            raise ValueError("departure window must end before the arrival window starts")
        dists = np.array([d for d, _ in self.distance_table])
        probs = np.array([p for _, p in self.distance_table])
        if np.any(dists < 0) or np.any(probs < 0):
            raise ValueError("distance table entries must be >= 0")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"distance probabilities must sum to 1, got {probs.sum()}")

    def mean_distance_km(self) -> float:
        return float(sum(d * p for d, p in self.distance_table))


def sample_driving_day(model: BehaviorModel, rng: np.random.Generator):
    """Draw one day's (departure minute, arrival minute, distance km).

    Consumes exactly three uniforms from ``rng``, so day ``k`` of a per-EV
    substream is reproducible as the k-th call. Departure < arrival always
    holds because the truncation windows are disjoint.
    """
    dep_u, arr_u, dist_u = rng.random(3)
    dep = float(model.departure.ppf(dep_u))
    arr = float(model.arrival.ppf(arr_u))
    probs = np.cumsum([p for _, p in model.distance_table])
    idx = int(np.searchsorted(probs, dist_u, side="right"))
    idx = min(idx, len(model.distance_table) - 1)
    return dep, arr, model.distance_table[idx][0]


def sample_driving_days(model: BehaviorModel, rng: np.random.Generator, n_days: int):
    """Vectorized plan for ``n_days``; identical draws to repeated sample_driving_day."""
    u = rng.random((n_days, 3))
    dep = model.departure.ppf(u[:, 0])
    arr = model.arrival.ppf(u[:, 1])
    probs = np.cumsum([p for _, p in model.distance_table])
    dists = np.array([d for d, _ in model.distance_table])
    idx = np.minimum(np.searchsorted(probs, u[:, 2], side="right"), len(dists) - 1)
    return dep, arr, dists[idx]


def behavior_rng(seed: int, ev_id: int) -> np.random.Generator:
    """Independent deterministic substream for one EV's behavior sampling."""
    return np.random.default_rng(np.random.SeedSequence([seed, 1, ev_id]))


@dataclass
class DissatisfactionEvent:
    """One departure below the desired state of charge."""

    ev_id: int
    day: int
    soc_at_departure: float  # fraction of capacity


@dataclass
class EvAgent:
    """Mutable battery and plug state for one EV."""

    spec: EvSpec
    soc_kwh: float = field(default=-1.0)
    soc_target: float = 1.0
    plugged: bool = True
    today: tuple[float, float, float] | None = None  # (dep minute, arr minute, km)

    def __post_init__(self):
        if self.soc_kwh < 0:
            self.soc_kwh = self.spec.battery_capacity_kwh  # start full
        if not 0 <= self.soc_kwh <= self.spec.battery_capacity_kwh:
            raise ValueError("initial SoC outside [0, capacity]")
        if not 0 < self.soc_target <= 1.0:
            raise ValueError("SoC target must be in (0, 1]")

    def drive(self, distance_km: float) -> None:
        """Deplete the battery for the day's driving, floored at empty."""
        used = distance_km * self.spec.consumption_kwh_per_km
        self.soc_kwh = max(0.0, self.soc_kwh - used)

    def energy_needed(self) -> float:
        """Charge request after the day's driving, capped by battery headroom."""
        if self.today is None:
            raise ValueError(f"EV {self.spec.id}: no driving day recorded")
        need = self.today[2] * self.spec.consumption_kwh_per_km
        headroom = self.spec.battery_capacity_kwh - self.soc_kwh
        return min(need, headroom)

    def apply_charging(self, energy_kwh: float) -> None:
        """Add delivered energy; clamps at capacity, rejects negative energy."""
        if energy_kwh < 0:
            raise ValueError("charging energy must be >= 0")
        self.soc_kwh = min(self.soc_kwh + energy_kwh, self.spec.battery_capacity_kwh)

    def plug_in(self) -> None:
        if self.plugged:
            raise ValueError(f"EV {self.spec.id}: already plugged in")
        self.plugged = True

    def depart(self, day: int) -> DissatisfactionEvent | None:
        """Unplug for the day's trip; reports dissatisfaction if undercharged.

        The comparison is strict (below target counts, exactly-at does not)
        with a tiny guard so float rounding of a met target never trips it.
        """
        if not self.plugged:
            raise ValueError(f"EV {self.spec.id}: departing while already unplugged")
        self.plugged = False
        target_kwh = self.soc_target * self.spec.battery_capacity_kwh
        if self.soc_kwh < target_kwh - SOC_EPS_KWH:
            return DissatisfactionEvent(
                self.spec.id, day, self.soc_kwh / self.spec.battery_capacity_kwh
            )
        return None


FLEET_HEADER = ["id", "battery_kwh", "max_power_kw", "consumption_kwh_per_km"]


def load_fleet_csv(path: Path | str) -> tuple[list[EvSpec], list[str]]:
    """Read a fleet definition CSV.

    Returns the specs plus warning messages; charging powers above the
    17.3 kW household limit are clamped with a warning, values below the
    7.2 kW fleet minimum are rejected.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"fleet file not found: {path}")
    specs: list[EvSpec] = []
    warnings: list[str] = []
    seen: set[int] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != FLEET_HEADER:
            raise DataError(f"{path}: expected header '{','.join(FLEET_HEADER)}'")
        for lineno, row in enumerate(reader, start=2):
            if not row or not row[0].strip():
                continue
            try:
                ev_id = int(row[0])
                battery = float(row[1])
                power = float(row[2])
                consumption = float(row[3])
            except (ValueError, IndexError):
                raise DataError(f"{path}: row {lineno}: unparsable fleet record") from None
            if ev_id in seen:
                raise DataError(f"{path}: row {lineno}: duplicate EV id {ev_id}")
            seen.add(ev_id)
            if power > HOUSEHOLD_POWER_CAP_KW:
                warnings.append(
                    f"EV {ev_id}: max power {power} kW exceeds the household limit; "
                    f"clamped to {HOUSEHOLD_POWER_CAP_KW} kW"
                )
                power = HOUSEHOLD_POWER_CAP_KW
            try:
                specs.append(EvSpec(ev_id, battery, power, consumption))
            except ValueError as exc:
                raise DataError(f"{path}: row {lineno}: {exc}") from None
    if not specs:
        raise DataError(f"{path}: no fleet records")
    return specs, warnings


def save_fleet_csv(path: Path | str, specs: list[EvSpec]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FLEET_HEADER)
        for s in specs:
            writer.writerow(
                [s.id, repr(s.battery_capacity_kwh), repr(s.max_charge_power_kw), repr(s.consumption_kwh_per_km)]
            )
