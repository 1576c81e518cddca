"""Exhaustive configuration sweeps and energy/land Pareto frontiers.

A grid point is (tilt, azimuth, row pitch). Each point is packed onto the
land parcel, simulated over the sweep's weather and scored. Tilts of
``VERTICAL_TILT`` and above use vertical packing (structure footprint,
landscape modules); lower tilts use conventional packing.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime
from pathlib import Path
from typing import Sequence

from .errors import InputError, SweepTooLargeError
from .irradiance import clearsky_weather, load_weather_csv
from .module_model import ModuleSpec
from .mounting import MountingConfig
from .plant_layout import LandParcel, PlantLayout, pack_conventional, pack_vertical
from .simulation import Plant, simulate, time_grid
from .solar_geometry import Location

DEFAULT_CAP = 10_000
VERTICAL_TILT = 75.0
STRUCTURE_WIDTH = 0.3
OBJECTIVES = ("specific_yield", "energy_per_acre", "weighted")
WEATHER_SOURCES = ("clearsky_year", "file")


@dataclass(frozen=True)
class SweepSpec:
    tilt_range: tuple
    azimuth_range: tuple
    pitch_range: tuple
    objective: str = "specific_yield"
    lam: float = 0.5
    weather_source: str = "clearsky_year"
    weather_path: str | None = None
    year: int = 2023
    step_minutes: float = 60.0

    def __post_init__(self):
        for name in ("tilt_range", "azimuth_range", "pitch_range"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise InputError(f"{name} must not be empty")
            object.__setattr__(self, name, values)
        if self.objective not in OBJECTIVES:
            raise InputError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise InputError(f"lambda must be within [0, 1], got {self.lam}")
        if self.weather_source not in WEATHER_SOURCES:
            raise InputError(f"weather_source must be one of {WEATHER_SOURCES}")
        if self.weather_source == "file" and not self.weather_path:
            raise InputError("weather_source 'file' needs weather_path")
        if any(p <= 0 for p in self.pitch_range):
            raise InputError("pitches must be > 0")

    @property
    def size(self) -> int:
        return len(self.tilt_range) * len(self.azimuth_range) * len(self.pitch_range)

    def grid(self):
        return list(itertools.product(sorted(set(self.tilt_range)), sorted(set(self.azimuth_range)),
                                      sorted(set(self.pitch_range))))


@dataclass(frozen=True)
class SweepPoint:
    tilt: float
    azimuth: float
    pitch: float
    feasible: bool
    total_modules: int = 0
    capacity_kwp: float = 0.0
    annual_energy_kwh: float = 0.0
    specific_yield: float = 0.0  # kWh/kWp/year
    energy_per_acre: float = 0.0
    farmable_fraction: float = 1.0
    objective: float = -math.inf

    @property
    def key(self):
        return (self.tilt, self.azimuth, self.pitch)

    @property
    def mounting(self) -> MountingConfig:
        return MountingConfig(self.tilt, self.azimuth % 360.0, self.pitch)


@dataclass(frozen=True)
class ParetoPoint:
    config: object
    annual_energy: float
    farmable_fraction: float
    dominated: bool = False


def layout_for(land: LandParcel, module: ModuleSpec, tilt: float, azimuth: float,
               pitch: float) -> PlantLayout | None:
    """Pack the land for one grid point, or None when the pitch is shorter than a row."""
    if tilt >= VERTICAL_TILT:
        inter_row = pitch - STRUCTURE_WIDTH
        if inter_row < 0:
            return None
        return pack_vertical(land, module, inter_row, STRUCTURE_WIDTH, landscape=True,
                             tilt=tilt, surface_azimuth=azimuth % 360.0)
    depth = module.length * math.cos(math.radians(tilt))
    inter_row = pitch - depth
    if inter_row < 0:
        return None
    return pack_conventional(land, module, tilt, inter_row, surface_azimuth=azimuth % 360.0)


def _weather(spec: SweepSpec, location: Location):
    if spec.weather_source == "file":
        return load_weather_csv(spec.weather_path, location)
    tz = location.tzinfo
    stamps = time_grid(datetime(spec.year, 1, 1, tzinfo=tz), datetime(spec.year + 1, 1, 1, tzinfo=tz),
                       spec.step_minutes)
    return clearsky_weather(location, stamps)


def _evaluate(args) -> SweepPoint:
    (tilt, azimuth, pitch), land, module, location, weather, step = args
    layout = layout_for(land, module, tilt, azimuth, pitch)
    if layout is None or layout.empty:
        return SweepPoint(tilt, azimuth, pitch, False)
    result = simulate(Plant(module, layout.mounting, layout=layout), weather, location,
                      step_minutes=step)
    days = result.days
    annual = result.energy_kwh * 365.0 / days
    return SweepPoint(
        tilt, azimuth, pitch, True,
        total_modules=layout.total_modules,
        capacity_kwp=layout.capacity,
        annual_energy_kwh=annual,
        specific_yield=annual / layout.capacity,
        energy_per_acre=annual / land.acres,
        farmable_fraction=layout.farmable_fraction,
    )


def _score(points: Sequence[SweepPoint], objective: str, lam: float) -> list[SweepPoint]:
    feasible = [p for p in points if p.feasible]
    e_max = max((p.annual_energy_kwh for p in feasible), default=0.0)
    out = []
    for p in points:
        if not p.feasible:
            out.append(p)
            continue
        if objective == "specific_yield":
            value = p.specific_yield
        elif objective == "energy_per_acre":
            value = p.energy_per_acre
        else:
            energy = p.annual_energy_kwh / e_max if e_max > 0 else 0.0
            value = lam * energy + (1.0 - lam) * p.farmable_fraction
        out.append(replace(p, objective=value))
    return out


def rank(points: Sequence[SweepPoint]) -> list[SweepPoint]:
    """Feasible points by objective descending, ties by (tilt, azimuth, pitch)."""
    feasible = sorted((p for p in points if p.feasible), key=lambda p: p.key)
    return sorted(feasible, key=lambda p: -p.objective)


def grid_sweep(spec: SweepSpec, land: LandParcel, module: ModuleSpec, location: Location,
               cap: int = DEFAULT_CAP, workers: int = 1):
    """Evaluate every grid point; returns (ranked feasible points, all points in grid order)."""
    if spec.size > cap:
        raise SweepTooLargeError(spec.size, cap)
    weather = _weather(spec, location)
    jobs = [(key, land, module, location, weather, spec.step_minutes) for key in spec.grid()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            evaluated = list(pool.map(_evaluate, jobs))
    else:
        evaluated = [_evaluate(j) for j in jobs]
    scored = _score(evaluated, spec.objective, spec.lam)
    return rank(scored), scored


def rescore(points: Sequence[SweepPoint], objective: str, lam: float = 0.5) -> list[SweepPoint]:
    """Re-rank already evaluated points under another objective without re-simulating."""
    if objective not in OBJECTIVES:
        raise InputError(f"objective must be one of {OBJECTIVES}")
    if not 0.0 <= lam <= 1.0:
        raise InputError("lambda must be within [0, 1]")
    return rank(_score(points, objective, lam))


def pareto_frontier(points) -> list[ParetoPoint]:
    """Non-dominated subset of (annual_energy, farmable_fraction, config) triples.

    Both axes are maximized. Sorted by energy descending, then farmable
    fraction descending; equal points are all kept.
    """
    items = list(points)
    for e, f, _ in items:
        if not (math.isfinite(e) and math.isfinite(f)):
            raise InputError("frontier values must be finite")
    order = sorted(range(len(items)), key=lambda i: (-items[i][0], -items[i][1], i))
    frontier = []
    best_f_higher_e = -math.inf  # best farmable among strictly higher energies
    i = 0
    while i < len(order):
        e = items[order[i]][0]
        j = i
        while j < len(order) and items[order[j]][0] == e:
            j += 1
        group = order[i:j]
        f_max = items[group[0]][1]
        if f_max > best_f_higher_e:
            for k in group:
                if items[k][1] == f_max:
                    frontier.append(ParetoPoint(items[k][2], e, items[k][1]))
        best_f_higher_e = max(best_f_higher_e, f_max)
        i = j
    return frontier


def dominates(a, b) -> bool:
    return a[0] >= b[0] and a[1] >= b[1] and (a[0] > b[0] or a[1] > b[1])


def brute_force_frontier(points) -> list:
    """O(n^2) reference: indices of points no other point dominates."""
    items = list(points)
    return [i for i, p in enumerate(items) if not any(dominates(q, p) for q in items)]


def sweep_frontier(points: Sequence[SweepPoint]) -> list[ParetoPoint]:
    return pareto_frontier([(p.annual_energy_kwh, p.farmable_fraction, p) for p in points if p.feasible])


SWEEP_HEADER = ["tilt", "azimuth", "pitch", "feasible", "total_modules", "capacity_kwp",
                "annual_energy_kwh", "specific_yield_kwh_per_kwp", "energy_per_acre_kwh",
                "farmable_fraction", "objective"]


def write_sweep_csv(points: Sequence[SweepPoint], path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for p in points:
            w.writerow([repr(p.tilt), repr(p.azimuth), repr(p.pitch), int(p.feasible), p.total_modules,
                        repr(p.capacity_kwp), repr(p.annual_energy_kwh), repr(p.specific_yield),
                        repr(p.energy_per_acre), repr(p.farmable_fraction),
                        repr(p.objective) if p.feasible else ""])


def write_frontier_json(frontier: Sequence[ParetoPoint], path) -> None:
    rows = []
    for fp in frontier:
        c = fp.config
        rows.append({"tilt": c.tilt, "azimuth": c.azimuth, "pitch": c.pitch,
                     "annual_energy_kwh": fp.annual_energy, "farmable_fraction": fp.farmable_fraction})
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump({"frontier": rows}, fh, indent=2)
        fh.write("\n")
