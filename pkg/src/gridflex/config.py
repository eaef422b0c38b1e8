"""Scenario configuration: a flat, versioned `key = value` text file.

Lines are `key = value`; `#` starts a comment; blank lines are ignored.
Paths are resolved relative to the file's directory. Unknown keys are an
error, as is a missing or unsupported `schema_version`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .fleet import DEFAULT_DISTANCE_TABLE, BehaviorModel, TruncatedNormal
from .timeseries import DEFAULT_SUMMER_BANDS, DEFAULT_WINTER_BANDS, TariffSchedule

SCHEMA_VERSION = 1

BASELINE = "baseline-rtp"
AGGREGATED = "aggregated"


class ConfigError(Exception):
    """Invalid or unusable scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a scenario run needs besides the data files themselves."""

    scenario: str
    spot_csv: Path
    baseload_csv: Path
    intensity_csv: Path
    fleet_csv: Path
    seed: int = 42
    num_days: int = 365
    num_households: int = 126
    ev_adoption: float = 1.0
    transformer_capacity_kw: float = 400.0
    soc_target: float = 1.0
    tick_minutes: int = 1
    include_baseload_in_revenue: bool = False
    tariff: TariffSchedule = field(default_factory=TariffSchedule)
    behavior: BehaviorModel = field(default_factory=BehaviorModel)

    def __post_init__(self):
        if self.scenario not in (BASELINE, AGGREGATED):
            raise ConfigError(f"scenario must be '{BASELINE}' or '{AGGREGATED}', got {self.scenario!r}")
        if self.transformer_capacity_kw <= 0:
            raise ConfigError("transformer_capacity_kw must be > 0")
        if not 0.0 <= self.ev_adoption <= 1.0:
            raise ConfigError("ev_adoption must be within [0, 1]")
        if self.num_days < 1:
            raise ConfigError("num_days must be >= 1")
        if self.num_households < 0:
            raise ConfigError("num_households must be >= 0")
        if self.tick_minutes != 1:
            raise ConfigError("tick_minutes is fixed at 1")
        if not 0 < self.soc_target <= 1.0:
            raise ConfigError("soc_target must be in (0, 1]")

    @property
    def horizon_days(self) -> int:
        """Simulated days plus one cooldown day so the last sessions finish."""
        return self.num_days + 1


_KNOWN_KEYS = {
    "schema_version", "scenario", "seed", "num_days", "num_households", "ev_adoption",
    "transformer_capacity_kw", "soc_target", "tick_minutes", "include_baseload_in_revenue",
    "spot_csv", "baseload_csv", "intensity_csv", "fleet_csv",
    "utc_offset_hours", "winter_start", "winter_end", "tariff_winter", "tariff_summer",
    "departure_mean", "departure_sd_minutes", "departure_min", "departure_max",
    "arrival_mean", "arrival_sd_minutes", "arrival_min", "arrival_max",
    "distance_table",
}

_REQUIRED_KEYS = {"schema_version", "scenario", "spot_csv", "baseload_csv", "intensity_csv", "fleet_csv"}


def _parse_kv(path: Path) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key in pairs:
            raise ConfigError(f"{path}: line {lineno}: duplicate key {key!r}")
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
        pairs[key] = value
    return pairs


def _parse_time_minutes(value: str, key: str) -> float:
    try:
        hh, mm = value.split(":")
        minutes = int(hh) * 60 + int(mm)
    except ValueError:
        raise ConfigError(f"{key}: expected HH:MM, got {value!r}") from None
    if not 0 <= minutes < 1440:
        raise ConfigError(f"{key}: time of day out of range: {value!r}")
    return float(minutes)


def _parse_month_day(value: str, key: str) -> tuple[int, int]:
    try:
        month, day = value.split("-")
        out = (int(month), int(day))
    except ValueError:
        raise ConfigError(f"{key}: expected MM-DD, got {value!r}") from None
    if not (1 <= out[0] <= 12 and 1 <= out[1] <= 31):
        raise ConfigError(f"{key}: invalid month-day {value!r}")
    return out


def _parse_bands(value: str, key: str):
    bands = []
    for part in value.split(","):
        try:
            hours, rate = part.split(":")
            a, b = hours.split("-")
            bands.append((int(a), int(b), float(rate)))
        except ValueError:
            raise ConfigError(f"{key}: expected 'H-H:rate,...', got {part!r}") from None
    return tuple(bands)


def _parse_distance_table(value: str):
    table = []
    for part in value.split(","):
        try:
            km, prob = part.split(":")
            table.append((float(km), float(prob)))
        except ValueError:
            raise ConfigError(f"distance_table: expected 'km:prob,...', got {part!r}") from None
    return tuple(table)


def _typed(pairs: dict[str, str], key: str, cast, default):
    if key not in pairs:
        return default
    try:
        return cast(pairs[key])
    except (ValueError, TypeError):
        raise ConfigError(f"{key}: cannot parse {pairs[key]!r}") from None


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(value)


def load_config(path: Path | str) -> ScenarioConfig:
    """Parse and validate a scenario configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    pairs = _parse_kv(path)
    missing = _REQUIRED_KEYS - pairs.keys()
    if missing:
        raise ConfigError(f"{path}: missing required keys: {', '.join(sorted(missing))}")
    version = _typed(pairs, "schema_version", int, None)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema_version {pairs['schema_version']!r}")

    base = path.parent

    def data_path(key: str) -> Path:
        p = Path(pairs[key])
        return p if p.is_absolute() else (base / p)

    tariff_kwargs = {}
    if "tariff_winter" in pairs:
        tariff_kwargs["winter_bands"] = _parse_bands(pairs["tariff_winter"], "tariff_winter")
    else:
        tariff_kwargs["winter_bands"] = DEFAULT_WINTER_BANDS
    if "tariff_summer" in pairs:
        tariff_kwargs["summer_bands"] = _parse_bands(pairs["tariff_summer"], "tariff_summer")
    else:
        tariff_kwargs["summer_bands"] = DEFAULT_SUMMER_BANDS
    if "winter_start" in pairs:
        tariff_kwargs["winter_start"] = _parse_month_day(pairs["winter_start"], "winter_start")
    if "winter_end" in pairs:
        tariff_kwargs["winter_end"] = _parse_month_day(pairs["winter_end"], "winter_end")
    tariff_kwargs["utc_offset_hours"] = _typed(pairs, "utc_offset_hours", int, 1)
    try:
        tariff = TariffSchedule(**tariff_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    def trunc(prefix: str, defaults: TruncatedNormal) -> TruncatedNormal:
        mean = pairs.get(f"{prefix}_mean")
        return TruncatedNormal(
            mean_minute=_parse_time_minutes(mean, f"{prefix}_mean") if mean else defaults.mean_minute,
            sd_minutes=_typed(pairs, f"{prefix}_sd_minutes", float, defaults.sd_minutes),
            lo_minute=(
                _parse_time_minutes(pairs[f"{prefix}_min"], f"{prefix}_min")
                if f"{prefix}_min" in pairs else defaults.lo_minute
            ),
            hi_minute=(
                _parse_time_minutes(pairs[f"{prefix}_max"], f"{prefix}_max")
                if f"{prefix}_max" in pairs else defaults.hi_minute
            ),
        )

    defaults = BehaviorModel()
    try:
        behavior = BehaviorModel(
            departure=trunc("departure", defaults.departure),
            arrival=trunc("arrival", defaults.arrival),
            distance_table=(
                _parse_distance_table(pairs["distance_table"])
                if "distance_table" in pairs else DEFAULT_DISTANCE_TABLE
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    try:
        return ScenarioConfig(
            scenario=pairs["scenario"],
            spot_csv=data_path("spot_csv"),
            baseload_csv=data_path("baseload_csv"),
            intensity_csv=data_path("intensity_csv"),
            fleet_csv=data_path("fleet_csv"),
            seed=_typed(pairs, "seed", int, 42),
            num_days=_typed(pairs, "num_days", int, 365),
            num_households=_typed(pairs, "num_households", int, 126),
            ev_adoption=_typed(pairs, "ev_adoption", float, 1.0),
            transformer_capacity_kw=_typed(pairs, "transformer_capacity_kw", float, 400.0),
            soc_target=_typed(pairs, "soc_target", float, 1.0),
            tick_minutes=_typed(pairs, "tick_minutes", int, 1),
            include_baseload_in_revenue=_typed(pairs, "include_baseload_in_revenue", _parse_bool, False),
            tariff=tariff,
            behavior=behavior,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(config, seed=seed)
