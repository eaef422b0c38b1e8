"""Deterministic scenario orchestrator.

One run advances day by day over the horizon: at midnight the next daily
baseload forecast is delivered (aggregated mode), each EV departs in the
morning and returns in the afternoon, plans its session against total
prices at plug-in, and either keeps that plan (baseline) or submits it to
the aggregator. Loads are recorded per minute. Identical config and seed
give bit-identical results.

Within one minute the event order is departures, then arrivals, then any
aggregator rescheduling they trigger; recorded load reflects schedules as
of the end of the minute's events, which is safe because the aggregator
never edits minutes earlier than the event that triggered it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aggregator import Aggregator, FlexOffer, InvariantError, compensation_for
from .config import AGGREGATED, ScenarioConfig
from .fleet import DissatisfactionEvent, EvAgent, behavior_rng, load_fleet_csv, sample_driving_days
from .kpi import compute_report
from .rtp import build_rtp_schedule
from .timeseries import (
    MINUTES_PER_DAY,
    DataError,
    Horizon,
    load_hourly_csv,
    tariff_hour_array,
)


@dataclass
class SessionRecord:
    """One completed plug-in session."""

    ev_id: int
    day: int  # plug-in day index
    plug_in: int
    departure: int
    requested_kwh: float
    delivered_kwh: float
    cost_dkk: float
    spot_cost_dkk: float
    tariff_cost_dkk: float
    emissions_kg: float
    original_cost_dkk: float
    compensation_dkk: float
    rescheduled: bool
    kept_off_kwh: float
    blocks: list[tuple[int, int, float]] = field(repr=False, default_factory=list)


@dataclass
class SimulationResult:
    """Everything a run produces; arrays are minute resolution over the horizon."""

    config: ScenarioConfig
    horizon: Horizon
    aggregate_load_kw: np.ndarray
    baseload_kw: np.ndarray
    ev_load_kw: np.ndarray
    charging_count: np.ndarray
    sessions: list[SessionRecord]
    dissatisfaction: list[DissatisfactionEvent]
    events: list[str]
    household_day_peaks_kw: np.ndarray
    tariff_minute_dkk: np.ndarray
    adopters: list[int]

    def kpi_report(self):
        return compute_report(
            self,
            self.config.transformer_capacity_kw,
            self.config.include_baseload_in_revenue,
        )


class _Run:
    """Mutable state of one scenario execution."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        spot = load_hourly_csv(config.spot_csv, "spot")
        base = load_hourly_csv(config.baseload_csv, "baseload")
        intensity = load_hourly_csv(config.intensity_csv, "intensity")
        if not (spot.start == base.start == intensity.start):
            raise DataError("spot, baseload and intensity series must share a start timestamp")
        self.horizon = Horizon(spot.start, config.horizon_days)
        n_hours = self.horizon.n_hours
        for name, series in (("spot", spot), ("baseload", base), ("intensity", intensity)):
            if len(series) < n_hours:
                raise DataError(
                    f"{name} series covers {len(series)} h but the run needs {n_hours} h "
                    f"({config.num_days} days + 1 cooldown day)"
                )

        specs, self.fleet_warnings = load_fleet_csv(config.fleet_csv)
        if len(specs) != config.num_households:
            raise DataError(
                f"fleet file has {len(specs)} EVs but num_households = {config.num_households}"
            )

        tariff_hour = tariff_hour_array(config.tariff, self.horizon.start, n_hours)
        spot_hour = spot.values[:n_hours]
        self.total_hour = spot_hour + tariff_hour
        self.price_min = np.repeat(self.total_hour, 60)
        self.tariff_min = np.repeat(tariff_hour, 60)
        self.spot_min = np.repeat(spot_hour, 60)
        self.intensity_min = np.repeat(intensity.values[:n_hours], 60)
        self.baseload_hour = base.values[:n_hours]
        self.baseload_min = np.repeat(self.baseload_hour, 60)

        rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
        ids = np.array(sorted(s.id for s in specs))
        rng.shuffle(ids)
        n_adopt = int(round(config.ev_adoption * len(ids)))
        self.adopters = sorted(int(i) for i in ids[:n_adopt])
        self.specs = {s.id: s for s in specs}
        self.agents = {
            ev: EvAgent(self.specs[ev], soc_target=config.soc_target) for ev in self.adopters
        }

        # one driving plan per EV for every simulated day plus the final departure day
        self.plans = {}
        for ev in self.adopters:
            dep, arr, dist = sample_driving_days(
                config.behavior, behavior_rng(config.seed, ev), config.num_days + 1
            )
            self.plans[ev] = (dep.astype(np.int64), arr.astype(np.int64), dist)

        self.aggregated = config.scenario == AGGREGATED
        self.agg = None
        if self.aggregated:
            self.agg = Aggregator(
                self.horizon.n_minutes,
                config.transformer_capacity_kw,
                self.total_hour,
                self.price_min,
            )
            for ev in self.adopters:
                self.agg.add_customer(ev)

        self.ev_load = np.zeros(self.horizon.n_minutes)
        self.charging_count = np.zeros(self.horizon.n_minutes, dtype=np.int32)
        self.active: dict[int, tuple[FlexOffer, float, int]] = {}
        self.sessions: list[SessionRecord] = []
        self.dissatisfaction: list[DissatisfactionEvent] = []
        self.events: list[str] = []
        self._audit_cursor = 0

    # -- event handlers ----------------------------------------------------

    def run(self) -> SimulationResult:
        for warning in self.fleet_warnings:
            self._log(0, f"warning: {warning}")
        horizon_days = self.config.horizon_days
        for day in range(horizon_days):
            t0 = day * MINUTES_PER_DAY
            if self.aggregated:
                if day == 0:
                    self._deliver_forecast(0, now=0)
                    if horizon_days > 1:
                        self._deliver_forecast(1, now=0)
                elif day + 1 < horizon_days:
                    self._deliver_forecast(day + 1, now=t0)

            events = []
            for ev in self.adopters:
                dep, arr, _ = self.plans[ev]
                if day <= self.config.num_days:
                    events.append((t0 + int(dep[day]), 0, ev))
                if day < self.config.num_days:
                    events.append((t0 + int(arr[day]), 1, ev))
            for t, kind, ev in sorted(events):
                if kind == 0:
                    self._departure(ev, t, day)
                else:
                    self._arrival(ev, t, day)

        if self.active:
            raise InvariantError("sessions still active at end of horizon")
        return self._assemble()

    def _deliver_forecast(self, day: int, now: int) -> None:
        self.agg.add_predicted_base_load(day, self.baseload_hour[day * 24 : day * 24 + 24], now=now)
        self._log(now, f"baseload forecast for day {day} delivered")
        self._drain_audit()

    def _departure(self, ev: int, t: int, day: int) -> None:
        agent = self.agents[ev]
        if ev in self.active:
            self._finalize_session(ev, t)
        dep, arr, dist = self.plans[ev]
        if day < self.config.num_days:
            agent.today = (float(dep[day]), float(arr[day]), float(dist[day]))
        event = agent.depart(day)
        if event is not None:
            self.dissatisfaction.append(event)
            self._log(t, f"ev {ev} departed dissatisfied at {event.soc_at_departure:.3f} of target")

    def _arrival(self, ev: int, t: int, day: int) -> None:
        agent = self.agents[ev]
        agent.drive(agent.today[2])
        agent.plug_in()
        requested = agent.energy_needed()
        dep_next = (day + 1) * MINUTES_PER_DAY + int(self.plans[ev][0][day + 1])
        spec = self.specs[ev]
        schedule = build_rtp_schedule(t, dep_next, requested, spec.max_charge_power_kw, self.total_hour)
        offer = FlexOffer(
            ev_id=ev,
            plug_in=t,
            departure=dep_next,
            max_power_kw=spec.max_charge_power_kw,
            required_energy_kwh=requested,
            schedule=schedule,
        )
        self.active[ev] = (offer, requested, day)
        self._log(t, f"ev {ev} plugged in, needs {requested:.3f} kWh until minute {dep_next}")
        if self.aggregated:
            self.agg.add_flex_offer(offer, now=t)
            self._drain_audit()

    def _finalize_session(self, ev: int, t: int) -> None:
        offer, requested, day = self.active.pop(ev)
        sched = offer.schedule
        if sched.end != t:
            raise InvariantError(f"ev {ev} departing at {t} but schedule ends at {sched.end}")
        seg = slice(sched.start, sched.end)
        delivered = sched.energy_kwh()
        spot_cost = float(np.dot(sched.power, self.spot_min[seg])) / 60.0
        tariff_cost = float(np.dot(sched.power, self.tariff_min[seg])) / 60.0
        emissions = float(np.dot(sched.power, self.intensity_min[seg])) / 60.0
        record = compensation_for(offer.original, sched, self.price_min, ev, day)
        compensation = record.compensation_dkk if offer.modified else 0.0
        self.agents[ev].apply_charging(delivered)
        self.ev_load[seg] += sched.power
        self.charging_count[seg] += sched.power > 0
        if self.aggregated:
            self.agg.unplug_ev(ev, now=t)
        self.sessions.append(
            SessionRecord(
                ev_id=ev,
                day=day,
                plug_in=sched.start,
                departure=sched.end,
                requested_kwh=requested,
                delivered_kwh=delivered,
                cost_dkk=record.shifted_cost_dkk,
                spot_cost_dkk=spot_cost,
                tariff_cost_dkk=tariff_cost,
                emissions_kg=emissions,
                original_cost_dkk=record.original_cost_dkk,
                compensation_dkk=compensation,
                rescheduled=offer.modified,
                kept_off_kwh=offer.kept_off_kwh,
                blocks=sched.blocks(),
            )
        )
        self._log(
            t,
            f"ev {ev} unplugged: delivered {delivered:.3f}/{requested:.3f} kWh"
            + (f", compensation {compensation:.2f} DKK" if offer.modified else ""),
        )

    # -- bookkeeping -------------------------------------------------------

    def _log(self, minute: int, message: str) -> None:
        self.events.append(f"{self.horizon.minute_ts(minute).isoformat()} {message}")

    def _drain_audit(self) -> None:
        while self._audit_cursor < len(self.agg.period_logs):
            log = self.agg.period_logs[self._audit_cursor]
            self._audit_cursor += 1
            self._log(
                log.t,
                f"shift pass {log.pass_no}: overload [{log.start},{log.end}) peak {log.peak_kw:.3f} kW, "
                f"{len(log.candidates)} EV(s) charging",
            )
            for a in log.actions:
                note = f", kept off {a.kept_off_kwh:.3f} kWh" if a.kept_off_kwh else ""
                self._log(
                    log.t,
                    f"shift ev {a.ev_id} (laxity {a.laxity_min:.1f} min): moved "
                    f"{a.placed_kwh:.3f} of {a.removed_kwh:.3f} kWh{note}",
                )

    def _assemble(self) -> SimulationResult:
        aggregate = self.baseload_min + self.ev_load
        if self.aggregated:
            drift = float(np.max(np.abs(self.agg.load - aggregate))) if len(aggregate) else 0.0
            if drift > 1e-6:
                raise InvariantError(f"aggregator forecast deviates from recorded load by {drift} kW")

        n_days = self.config.horizon_days
        n_households = self.config.num_households
        base_share = self.baseload_min / max(1, n_households)
        share_peaks = base_share.reshape(n_days, MINUTES_PER_DAY).max(axis=1)
        peaks = np.tile(share_peaks, (n_households, 1))
        by_ev: dict[int, list[SessionRecord]] = {}
        for s in self.sessions:
            by_ev.setdefault(s.ev_id, []).append(s)
        profile = np.empty_like(base_share)
        for row, ev in enumerate(self.adopters):
            if ev not in by_ev:
                continue
            np.copyto(profile, base_share)
            for s in by_ev[ev]:
                for start, n, kw in s.blocks:
                    profile[start : start + n] += kw
            peaks[row] = profile.reshape(n_days, MINUTES_PER_DAY).max(axis=1)

        return SimulationResult(
            config=self.config,
            horizon=self.horizon,
            aggregate_load_kw=aggregate,
            baseload_kw=self.baseload_min,
            ev_load_kw=self.ev_load,
            charging_count=self.charging_count,
            sessions=self.sessions,
            dissatisfaction=self.dissatisfaction,
            events=self.events,
            household_day_peaks_kw=peaks,
            tariff_minute_dkk=self.tariff_min,
            adopters=self.adopters,
        )


def run_scenario(config: ScenarioConfig) -> SimulationResult:
    """Execute one scenario; deterministic for a fixed (config, seed)."""
    return _Run(config).run()


@dataclass(frozen=True)
class ComparisonReport:
    baseline: object
    other: object
    percentage_diff: list[str]


def compare_runs(a: SimulationResult, b: SimulationResult) -> ComparisonReport:
    """KPI reports for two runs plus the percentage-difference row (b vs a)."""
    if a.horizon.start != b.horizon.start or a.horizon.days != b.horizon.days:
        raise ValueError("runs cover different spans and cannot be compared")
    if a.adopters != b.adopters:
        raise ValueError("runs simulate different fleets and cannot be compared")
    from .kpi import percentage_differences

    ra, rb = a.kpi_report(), b.kpi_report()
    return ComparisonReport(ra, rb, percentage_differences(ra, rb))
