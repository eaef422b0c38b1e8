"""DSO-operated aggregator: overload detection and laxity-ordered load shifting.

The aggregator pools every active charging session together with the daily
baseload forecasts into a per-minute load forecast. Whenever a new session
arrives or a forecast lands, it looks for minutes where the forecast exceeds
the transformer capacity and reschedules the EVs charging there, most
flexible (highest laxity) first: their power in the congested period is
zeroed and moved to free minutes later in the same hour, else to the
cheapest hour before departure with room, else the EV stays off for that
period and delivers less energy. Users are compensated for any cost
increase relative to their original self-chosen schedule.

All mutating calls are serialized in event order by the simulation engine;
``now`` always advances monotonically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .fleet import HOUSEHOLD_POWER_CAP_KW
from .rtp import ENERGY_EPS_KWH, ChargingSchedule
from .timeseries import MINUTES_PER_DAY

#: placement head-room, kW: keeps re-summed schedules under capacity despite
#: float reordering downstream; far below the 3-decimal output resolution
CAPACITY_MARGIN_KW = 1e-6


class AggregatorError(Exception):
    """Contract violation in an aggregator call (bad id, duplicate offer, ...)."""


class InvariantError(Exception):
    """An internal invariant failed; the simulation cannot be trusted."""


@dataclass
class FlexOffer:
    """One plug-in session as submitted by the charging controller."""

    ev_id: int
    plug_in: int
    departure: int
    max_power_kw: float
    required_energy_kwh: float
    schedule: ChargingSchedule
    original: ChargingSchedule = None  # frozen copy of the submitted schedule
    kept_off_kwh: float = 0.0
    modified: bool = False

    def __post_init__(self):
        if self.original is None:
            self.original = self.schedule.copy()


@dataclass(frozen=True)
class OverloadPeriod:
    """A maximal run of minutes whose forecast load strictly exceeds capacity."""

    start: int
    end: int
    peak_kw: float
    excess_kwh: float


@dataclass(frozen=True)
class CompensationRecord:
    """Cost delta owed to one EV user for one rescheduled session."""

    ev_id: int
    day: int
    original_cost_dkk: float
    shifted_cost_dkk: float
    compensation_dkk: float


@dataclass
class ShiftAction:
    ev_id: int
    laxity_min: float
    removed_kwh: float
    placed_kwh: float
    kept_off_kwh: float
    placed_runs: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class PeriodLog:
    """Audit record for one overload period in one rescheduling pass."""

    t: int
    pass_no: int
    start: int
    end: int
    peak_kw: float
    candidates: list[tuple[int, float]] = field(default_factory=list)
    actions: list[ShiftAction] = field(default_factory=list)


def find_overload_periods(load: np.ndarray, capacity_kw: float, lo: int = 0, hi: int | None = None):
    """Maximal contiguous minute ranges with load strictly above capacity."""
    if hi is None:
        hi = len(load)
    starts, ends = kernels.overload_runs(load, capacity_kw, int(lo), int(hi))
    periods = []
    for s, e in zip(starts, ends):
        seg = load[s:e]
        periods.append(
            OverloadPeriod(int(s), int(e), float(seg.max()), float((seg - capacity_kw).sum() / 60.0))
        )
    return periods


def laxity(offer: FlexOffer, now: int) -> float:
    """Scheduling slack in minutes: time to departure minus remaining charge time.

    Remaining charge time assumes full power for the energy still scheduled
    from ``now`` on. Floored at zero; a fully charged EV's laxity is simply
    its time to departure.
    """
    remaining_kwh = offer.schedule.energy_from(now)
    slack = (offer.departure - now) - remaining_kwh / offer.max_power_kw * 60.0
    return max(0.0, slack)


def compensation_for(
    original: ChargingSchedule,
    shifted: ChargingSchedule,
    minute_prices: np.ndarray,
    ev_id: int,
    day: int,
) -> CompensationRecord:
    """Price both schedules of one session; pay only positive deltas.

    Users keep any savings from being shifted into cheaper minutes; the
    aggregator covers any additional cost, which preserves the user's
    economic position.
    """
    if original.start != shifted.start or original.end != shifted.end:
        raise AggregatorError("schedules belong to different session windows")
    seg = minute_prices[original.start : original.end]
    original_cost = float(np.dot(original.power, seg)) / 60.0
    shifted_cost = float(np.dot(shifted.power, seg)) / 60.0
    return CompensationRecord(
        ev_id=ev_id,
        day=day,
        original_cost_dkk=original_cost,
        shifted_cost_dkk=shifted_cost,
        compensation_dkk=max(0.0, shifted_cost - original_cost),
    )


class Aggregator:
    """Single logical actor owning the portfolio and the load forecast.

    Args:
        n_minutes: length of the simulation horizon.
        capacity_kw: transformer capacity C_max; exactly capacity_kw is legal.
        hour_prices: total electricity price per grid hour, DKK/kWh.
        minute_prices: the same prices expanded to minutes (for costing).
    """

    def __init__(
        self,
        n_minutes: int,
        capacity_kw: float,
        hour_prices: np.ndarray,
        minute_prices: np.ndarray,
    ):
        if capacity_kw <= 0:
            raise ValueError("capacity must be > 0")
        self.capacity_kw = float(capacity_kw)
        self.n_minutes = int(n_minutes)
        self.hour_prices = np.asarray(hour_prices, dtype=np.float64)
        self.minute_prices = np.asarray(minute_prices, dtype=np.float64)
        self.baseload = np.zeros(self.n_minutes, dtype=np.float64)
        self.ev_load = np.zeros(self.n_minutes, dtype=np.float64)
        self.load = np.zeros(self.n_minutes, dtype=np.float64)  # baseload + ev_load
        self.customers: set[int] = set()
        self.offers: dict[int, FlexOffer] = {}
        self.days_covered = 0
        self.period_logs: list[PeriodLog] = []
        self.total_keep_off_kwh = 0.0
        self._now = 0

    # -- registration and data feeds ------------------------------------

    def add_customer(self, ev_id: int) -> None:
        if ev_id in self.customers:
            raise AggregatorError(f"EV {ev_id} already registered")
        self.customers.add(ev_id)

    def add_predicted_base_load(self, day: int, hourly_kw: np.ndarray, now: int | None = None) -> None:
        """Extend the baseload forecast by one day (24 hourly kW values).

        ``now`` is the delivery minute; the new information triggers a
        rescheduling pass over the already-planned sessions.
        """
        hourly = np.asarray(hourly_kw, dtype=np.float64)
        if hourly.shape != (24,):
            raise AggregatorError("baseload forecast must have 24 hourly values")
        if day < self.days_covered:
            raise AggregatorError(f"duplicate baseload forecast for day {day}")
        if day > self.days_covered:
            raise AggregatorError(
                f"baseload forecast gap: expected day {self.days_covered}, got day {day}"
            )
        lo = day * MINUTES_PER_DAY
        hi = lo + MINUTES_PER_DAY
        if hi > self.n_minutes:
            raise AggregatorError("baseload forecast beyond simulation horizon")
        per_minute = np.repeat(hourly, 60)
        self.baseload[lo:hi] = per_minute
        self.load[lo:hi] = per_minute + self.ev_load[lo:hi]
        self.days_covered = day + 1
        # new information may reveal overloads in already-planned sessions
        self.shift_loads(now=self._now if now is None else now)

    # -- session lifecycle -----------------------------------------------

    def add_flex_offer(self, offer: FlexOffer, now: int):
        """Admit a session; reschedule the portfolio if it forecasts an overload.

        Returns (modified ev ids, compensation records) covering every EV
        whose schedule this call changed, not only the new one. With no
        overload the portfolio is untouched.
        """
        if offer.ev_id not in self.customers:
            raise AggregatorError(f"EV {offer.ev_id} is not a registered customer")
        if offer.ev_id in self.offers:
            raise AggregatorError(f"EV {offer.ev_id} already has an active offer")
        if offer.max_power_kw > HOUSEHOLD_POWER_CAP_KW + 1e-12:
            raise AggregatorError(
                f"EV {offer.ev_id}: offer power {offer.max_power_kw} kW exceeds the household cap"
            )
        sched = offer.schedule
        if sched.start != offer.plug_in or sched.end != offer.departure:
            raise AggregatorError("schedule does not span [plug-in, departure)")
        if offer.departure > self.days_covered * MINUTES_PER_DAY:
            raise AggregatorError("offer departs beyond the known baseload horizon")
        if np.any(sched.power < 0) or np.any(sched.power > offer.max_power_kw + 1e-9):
            raise AggregatorError("schedule power outside [0, max_power]")
        self._advance(now)
        self.offers[offer.ev_id] = offer
        self.ev_load[sched.start : sched.end] += sched.power
        self.load[sched.start : sched.end] += sched.power
        return self.shift_loads(now)

    def unplug_ev(self, ev_id: int, now: int) -> None:
        """Drop the EV's offer; any still-unexecuted power leaves the forecast."""
        if ev_id not in self.customers:
            raise AggregatorError(f"EV {ev_id} is not a registered customer")
        offer = self.offers.pop(ev_id, None)
        if offer is None:
            raise AggregatorError(f"EV {ev_id} has no active offer to unplug")
        self._advance(now)
        sched = offer.schedule
        future = max(int(now), sched.start)
        if future < sched.end:
            self.ev_load[future : sched.end] -= sched.power[future - sched.start :]
            self.load[future : sched.end] -= sched.power[future - sched.start :]
            sched.power[future - sched.start :] = 0.0

    # -- overload detection and repair ------------------------------------

    def forecast(self, lo: int, hi: int) -> np.ndarray:
        """Read-only snapshot of the load forecast over [lo, hi)."""
        snap = self.load[lo:hi].copy()
        snap.setflags(write=False)
        return snap

    def lookahead_end(self, now: int) -> int:
        if not self.offers:
            return int(now)
        end = max(o.departure for o in self.offers.values())
        return min(end, self.days_covered * MINUTES_PER_DAY)

    def detect_overloads(self, now: int):
        return find_overload_periods(self.load, self.capacity_kw, now, self.lookahead_end(now))

    def shift_loads(self, now: int):
        """Resolve forecast overloads by shifting the most flexible EVs first.

        Implements the rule-based repair loop: per overload period, EVs
        charging in it are sorted by descending laxity and moved out one by
        one until the period fits under capacity; each displaced block is
        placed back later in its own hour when possible, otherwise in the
        cheapest hour before departure with free capacity, otherwise the EV
        is kept off for that period. Repeats until no overload remains or
        no further shift is possible.

        Returns (modified ev ids, compensation records for them).
        """
        self._advance(now)
        modified: set[int] = set()
        max_passes = 5 + len(self.offers)
        pass_no = 0
        while True:
            pass_no += 1
            if pass_no > max_passes:
                raise InvariantError("shift_loads exceeded its iteration bound")
            periods = self.detect_overloads(now)
            if not periods:
                break
            progress = False
            for period in periods:
                log = PeriodLog(
                    t=int(now), pass_no=pass_no, start=period.start, end=period.end, peak_kw=period.peak_kw
                )
                candidates = self._charging_in(period)
                ranked = sorted(candidates, key=lambda ev: (-laxity(self.offers[ev], now), ev))
                log.candidates = [(ev, laxity(self.offers[ev], now)) for ev in ranked]
                for ev in ranked:
                    seg = self.load[period.start : period.end]
                    if not np.any(seg > self.capacity_kw):
                        break  # resolved; leave the remaining EVs untouched
                    offer = self.offers[ev]
                    lax = laxity(offer, now)
                    removed = self._zero_in_period(offer, period)
                    if removed <= ENERGY_EPS_KWH:
                        continue
                    progress = True
                    placed, runs = self._relocate(offer, removed, period, now)
                    kept_off = removed - placed
                    if kept_off > ENERGY_EPS_KWH:
                        offer.kept_off_kwh += kept_off
                        self.total_keep_off_kwh += kept_off
                    else:
                        kept_off = 0.0
                    offer.modified = True
                    modified.add(ev)
                    log.actions.append(
                        ShiftAction(ev, lax, removed, placed, kept_off, runs)
                    )
                if log.actions:
                    self.period_logs.append(log)
            if not progress:
                break  # shifting impossible (e.g. baseload alone above capacity)
        records = [
            compensation_for(
                self.offers[ev].original,
                self.offers[ev].schedule,
                self.minute_prices,
                ev,
                self.offers[ev].plug_in // MINUTES_PER_DAY,
            )
            for ev in sorted(modified)
        ]
        return sorted(modified), records

    # -- internals ---------------------------------------------------------

    def _advance(self, now: int) -> None:
        if now < self._now:
            raise AggregatorError("aggregator calls must advance in event order")
        self._now = int(now)

    def _charging_in(self, period: OverloadPeriod) -> list[int]:
        out = []
        for ev, offer in self.offers.items():
            lo = max(period.start, offer.schedule.start)
            hi = min(period.end, offer.schedule.end)
            if lo < hi and np.any(
                offer.schedule.power[lo - offer.schedule.start : hi - offer.schedule.start] > 0
            ):
                out.append(ev)
        return out

    def _zero_in_period(self, offer: FlexOffer, period: OverloadPeriod) -> float:
        sched = offer.schedule
        lo = max(period.start, sched.start)
        hi = min(period.end, sched.end)
        if lo >= hi:
            return 0.0
        local = slice(lo - sched.start, hi - sched.start)
        removed = float(sched.power[local].sum()) / 60.0
        if removed <= 0.0:
            return 0.0
        self.ev_load[lo:hi] -= sched.power[local]
        self.load[lo:hi] -= sched.power[local]
        sched.power[local] = 0.0
        return removed

    def _relocate(self, offer: FlexOffer, energy_kwh: float, period: OverloadPeriod, now: int):
        """Place ``energy_kwh`` into free minutes of the offer's window.

        Tries a contiguous run inside a single hour first (the period's own
        hours in order, then the other hours by ascending price, searching
        backward from each hour's end); if no hour has a contiguous fit the
        energy is split over free minutes in the same hour preference order.
        Returns (placed kWh, list of placed (start, length) runs).
        """
        sched = offer.schedule
        window_lo = max(int(now), offer.plug_in)
        window_hi = min(offer.departure, self.days_covered * MINUTES_PER_DAY)
        if window_hi <= window_lo:
            return 0.0, []

        power = offer.max_power_kw
        e_per_min = power / 60.0
        n_full = int(energy_kwh / e_per_min + 1e-12)
        trim_kwh = energy_kwh - n_full * e_per_min
        if trim_kwh <= ENERGY_EPS_KWH:
            trim_kwh = 0.0
        need = n_full + (1 if trim_kwh else 0)
        if need == 0:
            return energy_kwh, []

        cap = self.capacity_kw - CAPACITY_MARGIN_KW
        load_view = self.load[sched.start : sched.end]
        same_hours = list(range(period.start // 60, (period.end - 1) // 60 + 1))
        first_hour = window_lo // 60
        last_hour = (window_hi - 1) // 60
        others = sorted(
            (h for h in range(first_hour, last_hour + 1) if h not in same_hours),
            key=lambda h: (self.hour_prices[h], h),
        )
        candidates = [h for h in same_hours if first_hour <= h <= last_hour] + others

        def hour_window(h):
            lo = max(h * 60, window_lo) - sched.start
            hi = min((h + 1) * 60, window_hi) - sched.start
            return lo, hi

        # contiguous fit within a single hour, latest start preferred
        for h in candidates:
            lo, hi = hour_window(h)
            if hi - lo < need:
                continue
            s = kernels.latest_free_run(load_view, sched.power, power, cap, lo, hi, need)
            if s < 0:
                continue
            block = np.full(need, power)
            if trim_kwh:
                block[-1] = trim_kwh * 60.0
            self._apply_placement(sched, s, block)
            return energy_kwh, [(sched.start + s, need)]

        # no contiguous fit anywhere: split across free minutes, same preference
        chosen: list[int] = []
        for h in candidates:
            if len(chosen) >= need:
                break
            lo, hi = hour_window(h)
            if hi <= lo:
                continue
            idx = kernels.free_minutes_desc(
                load_view, sched.power, power, cap, lo, hi, need - len(chosen)
            )
            chosen.extend(int(i) for i in idx)

        if not chosen:
            return 0.0, []
        placed_kwh = 0.0
        runs = []
        if len(chosen) >= need:
            use = chosen[:need]
            trim_minute = max(use) if trim_kwh else None
            for m in use:
                value = trim_kwh * 60.0 if m == trim_minute else power
                self._apply_placement(sched, m, np.array([value]))
                runs.append((sched.start + m, 1))
            placed_kwh = energy_kwh
        else:
            use = chosen[: min(len(chosen), n_full)]
            for m in use:
                self._apply_placement(sched, m, np.array([power]))
                runs.append((sched.start + m, 1))
            placed_kwh = len(use) * e_per_min
        return placed_kwh, runs

    def _apply_placement(self, sched: ChargingSchedule, local_start: int, block: np.ndarray) -> None:
        local = slice(local_start, local_start + len(block))
        if np.any(sched.power[local] != 0.0):
            raise InvariantError("relocation target minutes already occupied")
        sched.power[local] = block
        glo = sched.start + local_start
        self.ev_load[glo : glo + len(block)] += block
        self.load[glo : glo + len(block)] += block
