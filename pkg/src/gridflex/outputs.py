"""Run artifacts: CSV outputs, the event log, and the run manifest.

All files are byte-stable for fixed inputs: money in DKK with 2 decimals,
energies in kWh with 3, loads in kW with 3, timestamps ISO-8601 UTC.
"""

from __future__ import annotations

import hashlib
import json
from datetime import timedelta
from pathlib import Path

from .engine import SimulationResult
from .kpi import KPI_COLUMNS, KpiReport, OVERLOAD_BANDS
from .timeseries import DataError, MINUTES_PER_DAY, format_timestamp

MANIFEST_NAME = "manifest.json"
OUTPUT_FILES = ("load.csv", "sessions.csv", "compensation.csv", "kpi.csv", "events.log")


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: Path, config_path: Path, config, tool_version: str) -> dict:
    """Record the run's identity before simulating; verifies prior checksums.

    If the output directory already holds a manifest, its data checksums
    must match the current files: rerunning over changed inputs into the
    same directory is refused.
    """
    checksums = {
        "spot_csv": file_sha256(config.spot_csv),
        "baseload_csv": file_sha256(config.baseload_csv),
        "intensity_csv": file_sha256(config.intensity_csv),
        "fleet_csv": file_sha256(config.fleet_csv),
    }
    manifest = {
        "manifest_version": 1,
        "tool_version": tool_version,
        "config_path": str(config_path),
        "scenario": config.scenario,
        "seed": config.seed,
        "num_days": config.num_days,
        "num_households": config.num_households,
        "ev_adoption": config.ev_adoption,
        "transformer_capacity_kw": config.transformer_capacity_kw,
        "data_sha256": checksums,
    }
    existing = out_dir / MANIFEST_NAME
    if existing.exists():
        try:
            prior = json.loads(existing.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{existing}: unreadable manifest: {exc}") from None
        if prior.get("data_sha256") != checksums:
            raise DataError(
                f"{existing}: data files changed since the previous run into this directory"
            )
    out_dir.mkdir(parents=True, exist_ok=True)
    existing.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def read_manifest(out_dir: Path) -> dict:
    path = Path(out_dir) / MANIFEST_NAME
    if not path.exists():
        raise DataError(f"no manifest found in {out_dir}")
    return json.loads(path.read_text(encoding="utf-8"))


def write_outputs(result: SimulationResult, out_dir: Path | str) -> dict[str, Path]:
    """Write the five run outputs; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in OUTPUT_FILES}
    _write_load_csv(paths["load.csv"], result)
    _write_sessions_csv(paths["sessions.csv"], result)
    _write_compensation_csv(paths["compensation.csv"], result)
    write_kpi_csv(paths["kpi.csv"], result.kpi_report())
    paths["events.log"].write_text("\n".join(result.events) + "\n", encoding="utf-8")
    return paths


def _write_load_csv(path: Path, result: SimulationResult) -> None:
    horizon = result.horizon
    load = result.aggregate_load_kw
    time_of_day = [f"{m // 60:02d}:{m % 60:02d}:00Z" for m in range(MINUTES_PER_DAY)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("timestamp,kw\n")
        for day in range(horizon.days):
            date = (horizon.start + timedelta(days=day)).strftime("%Y-%m-%d")
            base = day * MINUTES_PER_DAY
            fh.writelines(
                f"{date}T{time_of_day[m]},{load[base + m]:.3f}\n" for m in range(MINUTES_PER_DAY)
            )


def _write_sessions_csv(path: Path, result: SimulationResult) -> None:
    horizon = result.horizon
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            "ev_id,plug_in,departure,requested_kwh,delivered_kwh,cost_dkk,spot_cost_dkk,"
            "tariff_cost_dkk,emissions_kg,compensation_dkk,rescheduled\n"
        )
        for s in result.sessions:
            fh.write(
                f"{s.ev_id},{format_timestamp(horizon.minute_ts(s.plug_in))},"
                f"{format_timestamp(horizon.minute_ts(s.departure))},"
                f"{s.requested_kwh:.3f},{s.delivered_kwh:.3f},{s.cost_dkk:.2f},"
                f"{s.spot_cost_dkk:.2f},{s.tariff_cost_dkk:.2f},{s.emissions_kg:.4f},"
                f"{s.compensation_dkk:.2f},{int(s.rescheduled)}\n"
            )


def _write_compensation_csv(path: Path, result: SimulationResult) -> None:
    horizon = result.horizon
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("ev_id,date,original_cost_dkk,shifted_cost_dkk,compensation_dkk\n")
        for s in result.sessions:
            if not s.rescheduled:
                continue
            date = horizon.minute_ts(s.plug_in).strftime("%Y-%m-%d")
            fh.write(
                f"{s.ev_id},{date},{s.original_cost_dkk:.2f},{s.cost_dkk:.2f},"
                f"{s.compensation_dkk:.2f}\n"
            )


def write_kpi_csv(path: Path, report: KpiReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(KPI_COLUMNS) + "\n")
        fh.write(",".join(report.as_row()) + "\n")


def read_kpi_csv(path: Path) -> KpiReport:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if len(lines) != 2 or lines[0].split(",") != KPI_COLUMNS:
        raise DataError(f"{path}: not a kpi.csv produced by this tool")
    raw = dict(zip(KPI_COLUMNS, lines[1].split(",")))

    def num(key):
        value = raw[key]
        return None if value == "n/a" else float(value)

    return KpiReport(
        overload_hours=num("overload_hours"),
        load_factor=num("load_factor"),
        daily_avg_coincidence_factor=num("daily_avg_coincidence_factor"),
        avg_charging_cost_dkk_per_kwh=num("avg_charging_cost_dkk_per_kwh"),
        avg_emissions_kg_per_kwh=num("avg_emissions_kg_per_kwh"),
        dso_tariff_revenue_dkk=num("dso_tariff_revenue_dkk"),
        dissatisfaction_count=int(raw["dissatisfaction_count"]),
        compensation_total_dkk=num("compensation_total_dkk"),
        max_peak_kw=num("max_peak_kw"),
        overload_histogram_min={
            name: float(raw[f"overload_min_{name}"]) for name, _, _ in OVERLOAD_BANDS
        },
    )


def write_compare_csv(path: Path, baseline: KpiReport, other: KpiReport, pct: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("run," + ",".join(KPI_COLUMNS) + "\n")
        fh.write("baseline," + ",".join(baseline.as_row()) + "\n")
        fh.write("aggregated," + ",".join(other.as_row()) + "\n")
        fh.write("pct_diff," + ",".join(pct) + "\n")
