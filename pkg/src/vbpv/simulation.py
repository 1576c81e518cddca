"""Time-stepped plant simulation and the energy metrics built on it.

Each step runs sun position, inter-row beam shading, front and rear POA
irradiance, cell temperature and DC power. Energy is the integral of the
power series (trapezoid by default, which is linear interpolation between
samples). The POA insolation used in the performance ratio is the
bifaciality-weighted equivalent irradiance, so a bifacial plant's PR is
normalized by the light its rating actually responds to.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.signal import find_peaks

from .errors import ComparisonError, CoverageError, InputError, OrderingError
from .irradiance import (
    WeatherSeries,
    clearsky_weather,
    fill_missing_dni,
    rear_orientation,
    transpose_components,
)
from .module_model import (
    G_STC,
    ModuleSpec,
    ThermalParams,
    cell_temperature,
    default_thermal,
    extract_single_diode,
    mpp,
    simple_power,
)
from .mounting import MountingConfig
from .plant_layout import PlantLayout
from .solar_geometry import Location, _shaded_fraction, sun_angles

ENGINES = ("simple", "diode")
RULES = ("trapezoid", "rectangle")
SERIES_HEADER = ["timestamp", "g_front_wm2", "g_rear_wm2", "t_cell_c", "p_dc_w"]
PEAK_PROMINENCE = 0.02  # fraction of the daily maximum


@dataclass(frozen=True)
class Plant:
    """A module type on a mounting, optionally replicated by a layout.

    Without a layout the plant is a single module; ``rated_kwp`` follows.
    """

    spec: ModuleSpec
    mounting: MountingConfig
    thermal: ThermalParams | None = None
    layout: PlantLayout | None = None

    @property
    def n_modules(self) -> int:
        return 1 if self.layout is None else self.layout.total_modules

    @property
    def rated_kwp(self) -> float:
        return self.n_modules * self.spec.p_max / 1000.0

    @property
    def label(self) -> str:
        return self.mounting.label

    @property
    def thermal_params(self) -> ThermalParams:
        return self.thermal or default_thermal(self.spec)


@dataclass(frozen=True)
class SimulationResult:
    label: str
    engine: str
    window: tuple
    step_minutes: float
    timestamps: tuple
    sun_elevation: np.ndarray
    sun_azimuth: np.ndarray
    shading_front: np.ndarray
    shading_rear: np.ndarray
    g_front: np.ndarray
    g_rear: np.ndarray
    g_equivalent: np.ndarray
    t_cell: np.ndarray
    dc_power_w: np.ndarray
    energy_kwh: float
    poa_insolation_kwh_m2: float
    rated_kwp: float
    rule: str = "trapezoid"

    @property
    def specific_energy(self) -> float:
        """kWh/kWp over the window."""
        return self.energy_kwh / self.rated_kwp

    @property
    def days(self) -> float:
        return (self.window[1] - self.window[0]).total_seconds() / 86400.0

    @property
    def pr(self) -> float:
        if self.poa_insolation_kwh_m2 <= 0:
            return math.nan
        return performance_ratio(self.energy_kwh, self.poa_insolation_kwh_m2, self.rated_kwp)

    def peak_count(self) -> int:
        return count_peaks(self.dc_power_w)

    def summary(self) -> dict:
        pr = self.pr
        return {
            "label": self.label,
            "engine": self.engine,
            "window": [self.window[0].isoformat(), self.window[1].isoformat()],
            "step_minutes": self.step_minutes,
            "rule": self.rule,
            "rated_kwp": self.rated_kwp,
            "energy_kwh": self.energy_kwh,
            "poa_insolation_kwh_m2": self.poa_insolation_kwh_m2,
            "pr": None if math.isnan(pr) else pr,
            "specific_energy_kwh_per_kwp": self.specific_energy,
            "peak_count": self.peak_count(),
            "two_peaks": self.peak_count() == 2,
        }


# ---------------------------------------------------------------------------
# Metrics


def integrate_energy(times, power_w, rule: str = "trapezoid") -> float:
    """Energy in kWh of a sampled power series.

    ``times`` are datetimes or seconds. The rectangle rule holds each
    sample until the next one (left Riemann sum).
    """
    if rule not in RULES:
        raise InputError(f"rule must be one of {RULES}, got {rule!r}")
    p = np.asarray(power_w, dtype=float)
    if p.ndim != 1 or len(p) < 1:
        raise InputError("need at least one power sample")
    if len(times) != len(p):
        raise InputError(f"{len(times)} times but {len(p)} power samples")
    if len(p) > 0 and isinstance(times[0], datetime):
        t = np.array([x.timestamp() for x in times], dtype=float)
    else:
        t = np.asarray(times, dtype=float)
    dt = np.diff(t)
    if np.any(dt < 0):
        i = int(np.flatnonzero(dt < 0)[0])
        raise OrderingError(f"samples out of order at index {i + 1}")
    if rule == "trapezoid":
        wh_s = float(np.sum(dt * (p[1:] + p[:-1]) / 2.0))
    else:
        wh_s = float(np.sum(dt * p[:-1]))
    return wh_s / 3.6e6


def energy_yield(g_poa_kwh_m2: float, pr: float, rated_kwp: float) -> float:
    """EY = G_POA * PR * rated / G_STC, with G_STC = 1 kW/m2."""
    if g_poa_kwh_m2 < 0 or pr < 0 or rated_kwp < 0:
        raise InputError("energy_yield inputs must be >= 0")
    return pr * _reference_yield(g_poa_kwh_m2, rated_kwp)


def performance_ratio(ey_kwh: float, g_poa_kwh_m2: float, rated_kwp: float) -> float:
    """PR = EY * G_STC / (G_POA * rated)."""
    if g_poa_kwh_m2 <= 0 or rated_kwp <= 0:
        raise InputError("G_POA and rated capacity must be > 0")
    return ey_kwh / _reference_yield(g_poa_kwh_m2, rated_kwp)


def _reference_yield(g_poa_kwh_m2, rated_kwp):
    # shared by both directions so the pair stays an exact inverse wherever floats allow
    return g_poa_kwh_m2 * rated_kwp / (G_STC / 1000.0)


def specific_yield(energy_kwh: float, rated_kwp: float, days: float = 365) -> float:
    """kWh/kWp/day."""
    if rated_kwp <= 0 or days <= 0:
        raise InputError("rated capacity and days must be > 0")
    return energy_kwh / (rated_kwp * days)


def annual_specific_yield(energy_kwh: float, rated_kwp: float, days: float = 365) -> float:
    """kWh/kWp/year from an energy total covering ``days`` days."""
    return specific_yield(energy_kwh, rated_kwp, days) * 365


def count_peaks(power, prominence: float = PEAK_PROMINENCE) -> int:
    """Interior local maxima standing out by ``prominence`` of the series maximum."""
    p = np.asarray(power, dtype=float)
    top = float(p.max()) if len(p) else 0.0
    if top <= 0:
        return 0
    peaks, _ = find_peaks(np.concatenate(([0.0], p, [0.0])), prominence=prominence * top)
    return len(peaks)


def peak_times(result: SimulationResult, prominence: float = PEAK_PROMINENCE):
    p = np.concatenate(([0.0], result.dc_power_w, [0.0]))
    top = float(result.dc_power_w.max())
    if top <= 0:
        return []
    peaks, _ = find_peaks(p, prominence=prominence * top)
    return [result.timestamps[i - 1] for i in peaks]


def midday_minimum_time(result: SimulationResult, prominence: float = PEAK_PROMINENCE):
    """Time of the lowest sample between the first two peaks, or None."""
    peaks = peak_times(result, prominence)
    if len(peaks) < 2:
        return None
    i0 = result.timestamps.index(peaks[0])
    i1 = result.timestamps.index(peaks[1])
    j = i0 + int(np.argmin(result.dc_power_w[i0:i1 + 1]))
    return result.timestamps[j]


# ---------------------------------------------------------------------------
# Simulation


def _aware(t: datetime, location: Location) -> datetime:
    return t if t.tzinfo else t.replace(tzinfo=location.tzinfo)


def time_grid(start: datetime, end: datetime, step_minutes: float) -> list[datetime]:
    if end < start:
        raise InputError("window end precedes start")
    step = timedelta(minutes=step_minutes)
    n = int((end - start) / step + 1e-9)
    return [start + k * step for k in range(n + 1)]


def _check_coverage(weather: WeatherSeries, start: datetime, end: datetime):
    if len(weather) == 0:
        raise CoverageError("weather series is empty")
    first, last = weather.timestamps[0], weather.timestamps[-1]
    problems = []
    if start < first:
        problems.append((start, first))
    if end > last:
        problems.append((last, end))
    problems += [(a, b) for a, b in weather.gaps if a < end and b > start]
    if problems:
        listed = ", ".join(f"{a.isoformat()}..{b.isoformat()}" for a, b in problems)
        raise CoverageError(f"window {start.isoformat()}..{end.isoformat()} not covered: {listed}",
                            problems)


def simulate(plant: Plant, weather: WeatherSeries, location: Location, window=None,
             step_minutes: float = 15.0, engine: str = "simple", rule: str = "trapezoid",
             equation_of_time_correction: bool = True) -> SimulationResult:
    """Run a plant over ``window`` (defaults to the weather span).

    Weather is linearly interpolated onto the step grid; a window reaching
    outside the series or across one of its gaps raises CoverageError.
    """
    if engine not in ENGINES:
        raise InputError(f"engine must be one of {ENGINES}, got {engine!r}")
    if not 1.0 <= step_minutes <= 60.0:
        raise InputError(f"step must be within [1, 60] minutes, got {step_minutes}")
    if len(weather) == 0:
        raise CoverageError("weather series is empty")
    if window is None:
        window = (weather.timestamps[0], weather.timestamps[-1])
    start, end = (_aware(t, location) for t in window)
    _check_coverage(weather, start, end)
    if np.isnan(weather.dni).any():
        weather = fill_missing_dni(weather, location)

    stamps = time_grid(start, end, step_minutes)
    secs = np.array([t.timestamp() for t in stamps])
    wsecs = weather.epoch_seconds
    ghi, dhi, dni, tamb = (np.interp(secs, wsecs, col)
                           for col in (weather.ghi, weather.dhi, weather.dni, weather.tamb))

    local = np.array([t.astimezone(location.tzinfo).replace(tzinfo=None) for t in stamps],
                     dtype="datetime64[ms]")
    el, az = sun_angles(location, local, equation_of_time_correction)

    m = plant.mounting
    slant = m.slant_width(plant.spec.length, plant.spec.width)
    if m.row_pitch is not None:
        shade_f = _shaded_fraction(slant, m.tilt, m.surface_azimuth, m.lower_edge, m.row_pitch, el, az, 1)
        shade_r = _shaded_fraction(slant, m.tilt, m.surface_azimuth, m.lower_edge, m.row_pitch, el, az, -1)
    else:
        shade_f = shade_r = np.zeros_like(el)

    albedo = location.albedo
    g_front = sum(transpose_components(ghi, dhi, dni, el, az, m.tilt, m.surface_azimuth, albedo, shade_f))
    rt, ra = rear_orientation(m.tilt, m.surface_azimuth)
    g_rear = sum(transpose_components(ghi, dhi, dni, el, az, rt, ra, albedo, shade_r))

    spec = plant.spec
    phi = spec.bifaciality
    g_eq = g_front + phi * g_rear
    t_cell = cell_temperature(tamb, g_front, g_rear, plant.thermal_params)
    if engine == "simple":
        p_module = simple_power(spec, g_eq, t_cell)
    else:
        p_module = mpp(extract_single_diode(spec), g_front, g_rear, spec.phi_isc_effective,
                       np.clip(t_cell, -40.0, 100.0))[2]
    power = np.maximum(np.asarray(p_module, dtype=float), 0.0) * plant.n_modules

    energy = integrate_energy(secs, power, rule)
    insolation = integrate_energy(secs, g_eq, rule)  # kWh/m2, since W/m2 integrate like W
    return SimulationResult(
        label=plant.label, engine=engine, window=(start, end), step_minutes=step_minutes,
        timestamps=tuple(stamps), sun_elevation=el, sun_azimuth=az,
        shading_front=np.asarray(shade_f), shading_rear=np.asarray(shade_r),
        g_front=g_front, g_rear=g_rear, g_equivalent=g_eq, t_cell=t_cell, dc_power_w=power,
        energy_kwh=energy, poa_insolation_kwh_m2=insolation, rated_kwp=plant.rated_kwp, rule=rule,
    )


# ---------------------------------------------------------------------------
# Clear-sky convenience drivers


def day_window(location: Location, day: date, start: time = time(0, 0), end: time | None = None):
    tz = location.tzinfo
    t0 = datetime.combine(day, start, tzinfo=tz)
    t1 = datetime.combine(day, end, tzinfo=tz) if end else t0.replace(hour=0) + timedelta(days=1)
    return t0, t1


def clearsky_day(plant: Plant, location: Location, day: date, step_minutes: float = 15.0,
                 engine: str = "simple", window=None, equation_of_time_correction: bool = True,
                 ambient_temp: float = 25.0) -> SimulationResult:
    """Simulate one calendar day (or a window within it) under clear sky."""
    if window is None:
        window = day_window(location, day)
    stamps = time_grid(window[0], window[1], step_minutes)
    weather = clearsky_weather(location, stamps, ambient_temp,
                               equation_of_time_correction=equation_of_time_correction)
    return simulate(plant, weather, location, window, step_minutes, engine,
                    equation_of_time_correction=equation_of_time_correction)


def clearsky_year(plant: Plant, location: Location, year: int = 2023, step_minutes: float = 15.0,
                  engine: str = "simple", ambient_temp: float = 25.0) -> SimulationResult:
    tz = location.tzinfo
    window = (datetime(year, 1, 1, tzinfo=tz), datetime(year + 1, 1, 1, tzinfo=tz))
    stamps = time_grid(window[0], window[1], step_minutes)
    weather = clearsky_weather(location, stamps, ambient_temp)
    return simulate(plant, weather, location, window, step_minutes, engine)


def monthly_pr(result: SimulationResult) -> dict[int, float]:
    """PR per calendar month of a result's local timestamps."""
    months = np.array([t.month for t in result.timestamps])
    secs = np.array([t.timestamp() for t in result.timestamps])
    out = {}
    for mth in sorted(set(months.tolist())):
        idx = np.flatnonzero(months == mth)
        if len(idx) < 2:
            continue
        e = integrate_energy(secs[idx], result.dc_power_w[idx], result.rule)
        g = integrate_energy(secs[idx], result.g_equivalent[idx], result.rule)
        if g > 0:
            out[mth] = performance_ratio(e, g, result.rated_kwp)
    return out


# ---------------------------------------------------------------------------
# Comparison


@dataclass(frozen=True)
class RatioTable:
    """``ratios[a][b]`` is specific energy of ``a`` over that of ``b``."""

    labels: tuple
    ratios: dict = field(default_factory=dict)

    def ratio(self, a: str, b: str) -> float:
        return self.ratios[a][b]

    def rows(self):
        return [[a] + [self.ratios[a][b] for b in self.labels] for a in self.labels]


def compare_configurations(results: Mapping[str, SimulationResult]) -> RatioTable:
    if len(results) < 1:
        raise ComparisonError("need at least one result")
    labels = tuple(sorted(results))
    windows = {results[k].window for k in labels}
    if len(windows) > 1:
        raise ComparisonError("results cover different windows: "
                              + "; ".join(f"{k}: {results[k].window[0].isoformat()}.."
                                          f"{results[k].window[1].isoformat()}" for k in labels))
    spec_e = {k: results[k].specific_energy for k in labels}
    ratios = {}
    for a in labels:
        ratios[a] = {}
        for b in labels:
            ratios[a][b] = spec_e[a] / spec_e[b] if spec_e[b] > 0 else math.nan
    return RatioTable(labels, ratios)


# ---------------------------------------------------------------------------
# Export


def write_series_csv(result: SimulationResult, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        for i, t in enumerate(result.timestamps):
            w.writerow([t.isoformat(), repr(float(result.g_front[i])), repr(float(result.g_rear[i])),
                        repr(float(result.t_cell[i])), repr(float(result.dc_power_w[i]))])


def write_summary_json(result: SimulationResult, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(result.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_gnuplot_profile(result: SimulationResult, path) -> None:
    """Two columns: hours since window start, DC power in W."""
    t0 = result.window[0]
    with open(Path(path), "w", encoding="utf-8") as fh:
        fh.write(f"# {result.label or 'plant'} {t0.isoformat()}\n# hours  p_dc_w\n")
        for t, p in zip(result.timestamps, result.dc_power_w):
            fh.write(f"{(t - t0).total_seconds() / 3600.0:.6f} {float(p):.6f}\n")


def write_ratio_csv(table: RatioTable, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + list(table.labels))
        for row in table.rows():
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
