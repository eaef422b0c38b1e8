"""Deterministic synthetic input data.

The original Danish datasets (DK1 day-ahead prices, the suburban feeder's
household consumption, the national fleet mix and driving statistics) are
not redistributable, so this module synthesizes stand-ins with the same
qualitative structure: a night price trough and evening peak, cheaper summer
middays from solar, a winter-heavy baseload with morning/evening bumps, and
a 126-vehicle fleet whose charging powers match the published summary
statistics (sum 1296.9 kW, min 7.4, max 17.3, mean ~10.3).

Everything is a pure function of (seed, length); re-running with the same
arguments reproduces identical files.
"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path

import numpy as np

from .fleet import EvSpec, save_fleet_csv
from .timeseries import (
    BaseloadProfile,
    CarbonIntensitySeries,
    PriceSeries,
    format_timestamp,
)

DEFAULT_START = datetime(2025, 1, 1)

# typical hour-of-day deviation from the base spot price, DKK/kWh
_SPOT_DAILY = np.array(
    [0.05, 0.02, 0.00, -0.01, 0.00, 0.04, 0.12, 0.18, 0.16, 0.12, 0.08, 0.06,
     0.05, 0.04, 0.06, 0.10, 0.16, 0.22, 0.24, 0.20, 0.14, 0.10, 0.08, 0.06]
)

# household demand shape, fraction of the daily mean
_BASE_DAILY = np.array(
    [0.75, 0.70, 0.68, 0.67, 0.68, 0.72, 0.85, 1.00, 1.05, 1.00, 0.95, 0.95,
     0.97, 0.95, 0.95, 1.00, 1.15, 1.35, 1.45, 1.40, 1.30, 1.15, 0.95, 0.82]
)


def _hour_axes(n_hours: int):
    hours = np.arange(n_hours)
    hour_of_day = hours % 24
    day_of_year = (hours // 24) % 365
    return hour_of_day, day_of_year


def _ar1(rng: np.random.Generator, n: int, rho: float, sigma: float) -> np.ndarray:
    shocks = rng.normal(0.0, sigma, n)
    out = np.empty(n)
    acc = 0.0
    for i in range(n):
        acc = rho * acc + shocks[i]
        out[i] = acc
    return out


def generate_spot_prices(seed: int, n_hours: int, start: datetime = DEFAULT_START) -> PriceSeries:
    """Hourly spot prices in DKK/kWh; negative values occur occasionally."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 11]))
    hod, doy = _hour_axes(n_hours)
    seasonal = 0.08 * np.cos(2 * np.pi * (doy - 15) / 365.0)
    solar_season = np.clip(np.sin(np.pi * (doy - 80) / 200.0), 0.0, None)
    midday_dip = -0.24 * solar_season * np.exp(-(((hod - 12.5) / 2.8) ** 2))
    weekend = np.where((np.arange(n_hours) // 24) % 7 >= 5, -0.03, 0.0)
    noise = _ar1(rng, n_hours, rho=0.7, sigma=0.05)
    values = 0.40 + _SPOT_DAILY[hod] + seasonal + midday_dip + weekend + noise
    return PriceSeries(start=start, values=values)


def generate_baseload(seed: int, n_hours: int, start: datetime = DEFAULT_START,
                      mean_kw: float = 95.0) -> BaseloadProfile:
    """Aggregate household baseload in kW (PV, heat pumps and EVs excluded)."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 22]))
    hod, doy = _hour_axes(n_hours)
    seasonal = 1.0 + 0.20 * np.cos(2 * np.pi * (doy - 15) / 365.0)
    noise = _ar1(rng, n_hours, rho=0.6, sigma=4.0)
    values = np.clip(mean_kw * _BASE_DAILY[hod] * seasonal + noise, 5.0, None)
    return BaseloadProfile(start=start, values=values)


def generate_intensity(seed: int, n_hours: int, start: datetime = DEFAULT_START) -> CarbonIntensitySeries:
    """Hourly carbon intensity in kg CO2-eq/kWh, lower in sunny middays."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 33]))
    hod, doy = _hour_axes(n_hours)
    seasonal = 0.06 * np.cos(2 * np.pi * (doy - 15) / 365.0)
    solar_season = np.clip(np.sin(np.pi * (doy - 80) / 200.0), 0.0, None)
    midday = -0.05 * solar_season * np.exp(-(((hod - 12.5) / 3.0) ** 2))
    noise = _ar1(rng, n_hours, rho=0.5, sigma=0.015)
    values = np.clip(0.22 + seasonal + midday + noise, 0.03, 0.60)
    return CarbonIntensitySeries(start=start, values=values)


#: charging-power mix for the default 126-EV fleet (kW -> count); the single
#: 9.2 kW vehicle makes the power total land exactly on 1296.9 kW
_POWER_MIX = ((7.4, 54), (11.0, 54), (9.2, 1), (17.3, 17))

_BATTERY_RANGE_KWH = {7.4: (45.0, 55.0), 9.2: (50.0, 65.0), 11.0: (55.0, 80.0), 17.3: (75.0, 100.0)}


def generate_fleet(seed: int, n_evs: int = 126) -> list[EvSpec]:
    """Synthetic fleet; for n_evs=126 the power mix matches the target stats."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 44]))
    powers = np.concatenate([np.full(count, kw) for kw, count in _POWER_MIX])
    if n_evs != len(powers):
        powers = powers[rng.integers(0, len(powers), size=n_evs)]
    rng.shuffle(powers)
    specs = []
    for ev_id, power in enumerate(powers):
        lo, hi = _BATTERY_RANGE_KWH[float(power)]
        battery = round(float(rng.uniform(lo, hi)), 1)
        consumption = round(float(rng.uniform(0.18, 0.22)), 3)
        specs.append(EvSpec(ev_id, battery, float(power), consumption))
    return specs


def write_dataset(out_dir: Path | str, seed: int, days: int, start: datetime = DEFAULT_START,
                  n_evs: int = 126) -> dict[str, Path]:
    """Write spot.csv, baseload.csv, intensity.csv and fleet.csv under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_hours = days * 24
    paths = {
        "spot": out / "spot.csv",
        "baseload": out / "baseload.csv",
        "intensity": out / "intensity.csv",
        "fleet": out / "fleet.csv",
    }
    generate_spot_prices(seed, n_hours, start).to_csv(paths["spot"])
    generate_baseload(seed, n_hours, start).to_csv(paths["baseload"])
    generate_intensity(seed, n_hours, start).to_csv(paths["intensity"])
    save_fleet_csv(paths["fleet"], generate_fleet(seed, n_evs))
    return paths


def dataset_summary(seed: int, days: int, start: datetime = DEFAULT_START) -> str:
    spot = generate_spot_prices(seed, days * 24, start)
    base = generate_baseload(seed, days * 24, start)
    return (
        f"start {format_timestamp(start)}, {days} days\n"
        f"spot DKK/kWh: min {spot.values.min():.3f} mean {spot.values.mean():.3f} "
        f"max {spot.values.max():.3f}\n"
        f"baseload kW: min {base.values.min():.1f} mean {base.values.mean():.1f} "
        f"max {base.values.max():.1f}"
    )
