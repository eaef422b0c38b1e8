"""Exogenous time series: spot prices, distribution tariffs, baseload, carbon intensity.

All series are hourly, contiguous, and immutable after loading. Timestamps are
UTC (naive ISO-8601, a trailing ``Z`` or ``+00:00`` is accepted). The
time-of-use tariff converts to local time with a fixed UTC offset; no DST.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

HOUR = timedelta(hours=1)
MINUTES_PER_DAY = 1440


class DataError(Exception):
    """Raised for unreadable, gappy, or otherwise invalid input data."""


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 UTC timestamp into a naive datetime.

    Accepts a trailing ``Z`` or ``+00:00``; any other explicit offset is
    rejected because all stored series are UTC.
    """
    raw = text.strip()
    cleaned = raw
    if cleaned.endswith("Z"):
        cleaned = cleaned[:-1]
    elif cleaned.endswith("+00:00"):
        cleaned = cleaned[:-6]
    try:
        ts = datetime.fromisoformat(cleaned)
    except ValueError as exc:
        raise DataError(f"unparsable timestamp {raw!r}") from exc
    if ts.tzinfo is not None:
        raise DataError(f"timestamp {raw!r} has a non-UTC offset; store series in UTC")
    return ts


def format_timestamp(ts: datetime) -> str:
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class HourlySeries:
    """A contiguous hourly series starting at ``start`` (UTC).

    Hourly kWh readings are interpreted as constant kW within the hour; the
    same convention applies to prices and intensities.
    """

    start: datetime
    values: np.ndarray

    #: human-readable unit, set by subclasses
    unit: str = field(default="", repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or len(values) == 0:
            raise DataError("series must be a non-empty 1-D value list")
        if not np.all(np.isfinite(values)):
            raise DataError("series contains non-finite values")
        values.setflags(write=False)
        self._validate_values(values)

    def _validate_values(self, values: np.ndarray) -> None:
        pass

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> datetime:
        return self.start + HOUR * len(self.values)

    def hour_index(self, t: datetime) -> int:
        """Index of the hour containing ``t``; raises if outside coverage."""
        offset = (t - self.start).total_seconds() / 3600.0
        idx = int(np.floor(offset))
        if idx < 0 or idx >= len(self.values):
            raise DataError(
                f"timestamp {format_timestamp(t)} outside series coverage "
                f"[{format_timestamp(self.start)}, {format_timestamp(self.end)})"
            )
        return idx

    def value_at(self, t: datetime) -> float:
        return float(self.values[self.hour_index(t)])

    def to_csv(self, path: Path | str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["timestamp", "value"])
            for i, v in enumerate(self.values):
                writer.writerow([format_timestamp(self.start + i * HOUR), repr(float(v))])


class PriceSeries(HourlySeries):
    """Hourly day-ahead spot prices in DKK/kWh. Negative prices are permitted."""

    unit = "DKK/kWh"


class BaseloadProfile(HourlySeries):
    """Aggregate non-EV household consumption, hourly kWh read as constant kW."""

    unit = "kW"

    def _validate_values(self, values):
        if np.any(values < 0):
            raise DataError("baseload values must be >= 0")


class CarbonIntensitySeries(HourlySeries):
    """Hourly carbon intensity of consumed electricity in kg CO2-eq/kWh."""

    unit = "kg/kWh"

    def _validate_values(self, values):
        if np.any(values < 0):
            raise DataError("carbon intensity values must be >= 0")


_SERIES_KINDS = {
    "spot": PriceSeries,
    "baseload": BaseloadProfile,
    "intensity": CarbonIntensitySeries,
}


def load_hourly_csv(path: Path | str, kind: str) -> HourlySeries:
    """Load a `timestamp,value` CSV into the series type for ``kind``.

    The file must have a header row and one row per hour with strictly
    contiguous timestamps; any gap or unparsable cell is a hard error that
    names the offending row.

    Args:
        path: CSV file location.
        kind: one of ``spot``, ``baseload``, ``intensity``.

    Raises:
        DataError: missing file, bad header, gaps, or unparsable values.
    """
    if kind not in _SERIES_KINDS:
        raise ValueError(f"unknown series kind {kind!r}")
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")

    timestamps: list[datetime] = []
    values: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["timestamp", "value"]:
            raise DataError(f"{path}: expected header 'timestamp,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise DataError(f"{path}: row {lineno} has no value column")
            try:
                ts = parse_timestamp(row[0])
            except DataError as exc:
                raise DataError(f"{path}: row {lineno}: {exc}") from None
            try:
                val = float(row[1])
            except ValueError:
                raise DataError(f"{path}: row {lineno}: unparsable value {row[1]!r}") from None
            timestamps.append(ts)
            values.append(val)

    if not values:
        raise DataError(f"{path}: no data rows")
    for i in range(1, len(timestamps)):
        delta = timestamps[i] - timestamps[i - 1]
        if delta != HOUR:
            kind_msg = "gap" if delta > HOUR else "non-monotonic timestamps"
            raise DataError(
                f"{path}: {kind_msg} at row {i + 2} "
                f"({format_timestamp(timestamps[i - 1])} -> {format_timestamp(timestamps[i])})"
            )
    try:
        return _SERIES_KINDS[kind](start=timestamps[0], values=np.array(values))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


# --- time-of-use tariff ---------------------------------------------------

#: Trefor "Tariff Model 3.0" C-customer rates, oere/kWh, as (start_hour, end_hour, rate)
DEFAULT_WINTER_BANDS = ((0, 6, 9.04), (6, 17, 27.10), (17, 21, 81.31), (21, 24, 27.10))
DEFAULT_SUMMER_BANDS = ((0, 6, 9.04), (6, 17, 13.55), (17, 21, 35.24), (21, 24, 13.55))


@dataclass(frozen=True)
class TariffSchedule:
    """Seasonal time-of-use distribution tariff.

    Rates are stored in oere/kWh as published and converted to DKK/kWh at
    lookup. Band hours and the winter date range are in local time, derived
    from UTC with the fixed ``utc_offset_hours`` (no DST).
    """

    winter_bands: tuple[tuple[int, int, float], ...] = DEFAULT_WINTER_BANDS
    summer_bands: tuple[tuple[int, int, float], ...] = DEFAULT_SUMMER_BANDS
    winter_start: tuple[int, int] = (10, 1)  # (month, day), inclusive
    winter_end: tuple[int, int] = (3, 31)  # (month, day), inclusive
    utc_offset_hours: int = 1

    def __post_init__(self):
        for name, bands in (("winter", self.winter_bands), ("summer", self.summer_bands)):
            covered = sorted((int(a), int(b)) for a, b, _ in bands)
            edge = 0
            for a, b in covered:
                if a != edge or b <= a:
                    raise ValueError(f"{name} bands must partition [0,24) without overlap")
                edge = b
            if edge != 24:
                raise ValueError(f"{name} bands must cover up to hour 24")
            if any(rate < 0 for _, _, rate in bands):
                raise ValueError(f"{name} rates must be >= 0")

    def is_winter(self, local_day: date) -> bool:
        key = (local_day.month, local_day.day)
        start, end = self.winter_start, self.winter_end
        if start <= end:
            return start <= key <= end
        return key >= start or key <= end  # range wraps over new year

    def rate_dkk_local(self, local_day: date, local_hour: int) -> float:
        """Rate in DKK/kWh for a local calendar day and hour of day."""
        bands = self.winter_bands if self.is_winter(local_day) else self.summer_bands
        for a, b, rate in bands:
            if a <= local_hour < b:
                return rate / 100.0
        raise AssertionError("bands are total over [0,24)")


def tariff_at(schedule: TariffSchedule, t: datetime) -> float:
    """Distribution tariff in DKK/kWh applying at UTC timestamp ``t``."""
    local = t + timedelta(hours=schedule.utc_offset_hours)
    return schedule.rate_dkk_local(local.date(), local.hour)


def total_price(spot: PriceSeries, schedule: TariffSchedule, t: datetime) -> float:
    """Spot price plus distribution tariff at ``t``, constant within the hour."""
    return spot.value_at(t) + tariff_at(schedule, t)


def baseload_forecast(profile: BaseloadProfile, day: date) -> np.ndarray:
    """Perfect 24-hour forecast for ``day``: the recorded values themselves."""
    day_start = datetime(day.year, day.month, day.day)
    offset = (day_start - profile.start).total_seconds() / 3600.0
    first = int(offset)
    if first != offset or first < 0 or first + 24 > len(profile):
        raise DataError(f"day {day.isoformat()} not covered by baseload profile")
    return profile.values[first : first + 24].copy()


def tariff_hour_array(schedule: TariffSchedule, start: datetime, n_hours: int) -> np.ndarray:
    """Tariff in DKK/kWh for each of ``n_hours`` hours from ``start`` (UTC)."""
    out = np.empty(n_hours, dtype=np.float64)
    for h in range(n_hours):
        out[h] = tariff_at(schedule, start + h * HOUR)
    return out


@dataclass(frozen=True)
class Horizon:
    """The simulation's minute grid: ``days`` whole days from ``start`` (UTC midnight)."""

    start: datetime
    days: int

    def __post_init__(self):
        if self.start.hour or self.start.minute or self.start.second or self.start.microsecond:
            raise DataError("simulation horizon must start at a UTC midnight")
        if self.days < 1:
            raise ValueError("horizon must span at least one day")

    @property
    def n_minutes(self) -> int:
        return self.days * MINUTES_PER_DAY

    @property
    def n_hours(self) -> int:
        return self.days * 24

    def minute_ts(self, minute: int) -> datetime:
        return self.start + timedelta(minutes=int(minute))

    def day_of_minute(self, minute: int) -> int:
        return int(minute) // MINUTES_PER_DAY
