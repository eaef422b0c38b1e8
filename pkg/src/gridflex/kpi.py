"""Key performance indicators: load factor, coincidence factor, overload
statistics, charging cost, emissions, tariff revenue, dissatisfaction,
compensation, and the upgrade-payback comparison.

All functions are pure over the simulation outputs; averages over consumers
are unweighted means per consumer unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .timeseries import MINUTES_PER_DAY

#: transformer loading severity bands relative to nominal capacity,
#: (lower %, upper %] per IEC 60076-7 loading guidance
OVERLOAD_BANDS = (
    ("normal_cyclic", 100.0, 150.0),
    ("long_time_emergency", 150.0, 180.0),
    ("short_time_emergency", 180.0, 200.0),
    ("beyond_limit", 200.0, float("inf")),
)

KPI_COLUMNS = [
    "overload_hours",
    "load_factor",
    "daily_avg_coincidence_factor",
    "avg_charging_cost_dkk_per_kwh",
    "avg_emissions_kg_per_kwh",
    "dso_tariff_revenue_dkk",
    "dissatisfaction_count",
    "compensation_total_dkk",
    "max_peak_kw",
    "overload_min_normal_cyclic",
    "overload_min_long_time_emergency",
    "overload_min_short_time_emergency",
    "overload_min_beyond_limit",
]


@dataclass(frozen=True)
class KpiReport:
    """One scenario's KPI row; per-kWh averages are None when nothing charged."""

    overload_hours: float
    load_factor: float
    daily_avg_coincidence_factor: float
    avg_charging_cost_dkk_per_kwh: float | None
    avg_emissions_kg_per_kwh: float | None
    dso_tariff_revenue_dkk: float
    dissatisfaction_count: int
    compensation_total_dkk: float
    max_peak_kw: float
    overload_histogram_min: dict[str, float]

    def as_row(self) -> list[str]:
        def fmt(value, spec):
            return "n/a" if value is None else format(value, spec)

        vals = [
            fmt(self.overload_hours, ".4f"),
            fmt(self.load_factor, ".6f"),
            fmt(self.daily_avg_coincidence_factor, ".6f"),
            fmt(self.avg_charging_cost_dkk_per_kwh, ".4f"),
            fmt(self.avg_emissions_kg_per_kwh, ".4f"),
            fmt(self.dso_tariff_revenue_dkk, ".2f"),
            str(self.dissatisfaction_count),
            fmt(self.compensation_total_dkk, ".2f"),
            fmt(self.max_peak_kw, ".3f"),
        ]
        vals += [fmt(self.overload_histogram_min[name], ".1f") for name, _, _ in OVERLOAD_BANDS]
        return vals


def load_factor(hourly_consumption_kwh: np.ndarray, load_kw: np.ndarray, n_hours: int) -> float:
    """Total consumption over (peak load x hours); 1.0 for a flat profile."""
    if n_hours < 1:
        raise ValueError("n_hours must be >= 1")
    peak = float(np.max(load_kw))
    if peak <= 0:
        raise ValueError("load factor undefined for an all-zero load")
    return float(np.sum(hourly_consumption_kwh)) / (peak * n_hours)


def coincidence_factor(agg_load_kw: np.ndarray, individual_loads_kw: np.ndarray) -> float:
    """Aggregate peak over the sum of individual peaks within one window.

    ``individual_loads_kw`` has one row per consumer. 1.0 means every
    consumer peaks in the same time step.
    """
    individual_peaks = np.max(individual_loads_kw, axis=1)
    denom = float(np.sum(individual_peaks))
    if denom <= 0:
        raise ValueError("coincidence factor undefined when all consumers are zero")
    return float(np.max(agg_load_kw)) / denom


def daily_coincidence_factors(household_day_peaks: np.ndarray, agg_day_peaks: np.ndarray) -> np.ndarray:
    """Per-day CF from per-day peaks of each household's combined load.

    ``household_day_peaks`` is (consumers x days) where each entry is the
    day's peak of that household's baseload share plus its own EV charging.
    """
    denom = household_day_peaks.sum(axis=0)
    return agg_day_peaks / denom


def dissatisfaction_total(events) -> int:
    """Number of departures below the user's desired state of charge."""
    return len(events)


def overload_stats(load_kw: np.ndarray, capacity_kw: float):
    """Overload time, severity histogram, and maximum peak.

    Minutes with load strictly above capacity are bucketed by their ratio to
    capacity into the standard loading bands; exactly 100% is not an
    overload. Returns (total hours, {band: minutes}, max peak kW).
    """
    if capacity_kw <= 0:
        raise ValueError("capacity must be > 0")
    ratio = load_kw / capacity_kw * 100.0
    histogram = {}
    total_minutes = 0
    for name, lo, hi in OVERLOAD_BANDS:
        n = int(np.count_nonzero((ratio > lo) & (ratio <= hi)))
        histogram[name] = float(n)
        total_minutes += n
    return total_minutes / 60.0, histogram, float(np.max(load_kw)) if len(load_kw) else 0.0


def per_consumer_unit_costs(session_costs: dict[int, float], session_energies: dict[int, float]):
    """DKK/kWh per consumer (only consumers that charged anything)."""
    out = {}
    for ev, energy in session_energies.items():
        if energy > 0:
            out[ev] = session_costs[ev] / energy
    return out


def avg_charging_cost(session_costs: dict[int, float], session_energies: dict[int, float]) -> float:
    """Unweighted mean over consumers of each consumer's DKK/kWh."""
    unit = per_consumer_unit_costs(session_costs, session_energies)
    if not unit:
        raise ValueError("average charging cost undefined with zero charged energy")
    return float(np.mean(list(unit.values())))


def avg_emissions(session_emissions_kg: dict[int, float], session_energies: dict[int, float]) -> float:
    """Unweighted mean over consumers of each consumer's kg CO2-eq per kWh."""
    unit = {
        ev: session_emissions_kg[ev] / e for ev, e in session_energies.items() if e > 0
    }
    if not unit:
        raise ValueError("average emissions undefined with zero charged energy")
    return float(np.mean(list(unit.values())))


def payback_years(upgrade_cost_dkk: float, annual_compensation_dkk: float) -> float | None:
    """Years of aggregator compensation matching one upgrade's cost.

    Returns None (not applicable) when the annual compensation is zero or
    negative rather than dividing.
    """
    if annual_compensation_dkk <= 0:
        return None
    return upgrade_cost_dkk / annual_compensation_dkk


def percentage_differences(base: KpiReport, other: KpiReport) -> list[str]:
    """Per-column percentage change versus the baseline column, '-' when undefined."""
    out = []
    for b, o in zip(_numeric_columns(base), _numeric_columns(other)):
        if b is None or o is None:
            out.append("-")
        elif b == 0:
            out.append("-" if o == 0 else "n/a")
        else:
            out.append(f"{(o - b) / abs(b) * 100.0:+.1f}%")
    return out


def _numeric_columns(r: KpiReport) -> list[float]:
    vals = [
        r.overload_hours,
        r.load_factor,
        r.daily_avg_coincidence_factor,
        r.avg_charging_cost_dkk_per_kwh,
        r.avg_emissions_kg_per_kwh,
        r.dso_tariff_revenue_dkk,
        float(r.dissatisfaction_count),
        r.compensation_total_dkk,
        r.max_peak_kw,
    ]
    vals += [r.overload_histogram_min[name] for name, _, _ in OVERLOAD_BANDS]
    return vals


def compute_report(result, capacity_kw: float, include_baseload_in_revenue: bool = False) -> KpiReport:
    """Assemble the full KPI row from a SimulationResult."""
    agg = result.aggregate_load_kw
    n_hours = len(agg) // 60
    hourly_consumption = agg.reshape(n_hours, 60).sum(axis=1) / 60.0
    lf = load_factor(hourly_consumption, agg, n_hours)

    agg_day_peaks = agg.reshape(-1, MINUTES_PER_DAY).max(axis=1)
    cf_days = daily_coincidence_factors(result.household_day_peaks_kw, agg_day_peaks)
    overload_hours, histogram, max_peak = overload_stats(agg, capacity_kw)

    costs: dict[int, float] = {}
    energies: dict[int, float] = {}
    emissions: dict[int, float] = {}
    tariff_revenue = 0.0
    compensation_total = 0.0
    for s in result.sessions:
        costs[s.ev_id] = costs.get(s.ev_id, 0.0) + s.cost_dkk
        energies[s.ev_id] = energies.get(s.ev_id, 0.0) + s.delivered_kwh
        emissions[s.ev_id] = emissions.get(s.ev_id, 0.0) + s.emissions_kg
        tariff_revenue += s.tariff_cost_dkk
        compensation_total += s.compensation_dkk
    if include_baseload_in_revenue:
        tariff_revenue += float(np.dot(result.baseload_kw, result.tariff_minute_dkk)) / 60.0

    charged_anything = any(e > 0 for e in energies.values())
    return KpiReport(
        overload_hours=overload_hours,
        load_factor=lf,
        daily_avg_coincidence_factor=float(np.mean(cf_days)),
        avg_charging_cost_dkk_per_kwh=avg_charging_cost(costs, energies) if charged_anything else None,
        avg_emissions_kg_per_kwh=avg_emissions(emissions, energies) if charged_anything else None,
        dso_tariff_revenue_dkk=tariff_revenue,
        dissatisfaction_count=len(result.dissatisfaction),
        compensation_total_dkk=compensation_total,
        max_peak_kw=max_peak,
        overload_histogram_min=histogram,
    )
