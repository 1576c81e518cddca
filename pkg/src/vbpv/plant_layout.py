"""Packing module rows onto a rectangular land parcel.

Counts follow fencepost arithmetic: ``n`` items of size ``s`` separated by
``n - 1`` gaps ``g`` fit on an edge ``L`` when ``n*s + (n-1)*g <= L``,
so ``n = floor((L + g) / (s + g))``. Rows run along the parcel length
and are stacked along its width. Edge margins are zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError
from .module_model import ModuleSpec
from .mounting import MountingConfig, make_label
from .solar_geometry import RowGeometry, min_row_spacing

ACRE_M2 = 4046.86
_EPS = 1e-9


@dataclass(frozen=True)
class LandParcel:
    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise InputError(f"land length and width must be > 0, got {self.length} x {self.width}")

    @property
    def area(self) -> float:
        return self.length * self.width

    @property
    def acres(self) -> float:
        return self.area / ACRE_M2

    @classmethod
    def square_acres(cls, acres: float = 1.0) -> "LandParcel":
        if acres <= 0:
            raise InputError("acres must be > 0")
        side = math.sqrt(acres * ACRE_M2)
        return cls(side, side)


@dataclass(frozen=True)
class PlantLayout:
    mounting: MountingConfig
    module_name: str
    module_p_max: float
    modules_per_row: int
    row_count: int
    inter_module_gap: float
    row_pitch: float
    structure_width: float
    footprint_area: float
    land_area: float

    @property
    def total_modules(self) -> int:
        return self.modules_per_row * self.row_count

    @property
    def capacity(self) -> float:
        """Installed DC capacity in kWp."""
        return self.total_modules * self.module_p_max / 1000.0

    @property
    def empty(self) -> bool:
        return self.total_modules == 0

    @property
    def gcr(self) -> float:
        """Ground footprint of modules or structures over land area (0 for an empty layout)."""
        # fit_count tolerates float noise at the land edge, so clip that noise here
        return min(self.footprint_area / self.land_area, 1.0)

    @property
    def farmable_fraction(self) -> float:
        return 1.0 - self.gcr

    def to_dict(self) -> dict:
        return {
            "mounting": self.mounting.to_dict(),
            "module": self.module_name,
            "modules_per_row": self.modules_per_row,
            "row_count": self.row_count,
            "total_modules": self.total_modules,
            "capacity_kwp": self.capacity,
            "inter_module_gap": self.inter_module_gap,
            "row_pitch": self.row_pitch,
            "structure_width": self.structure_width,
            "gcr": self.gcr,
            "farmable_fraction": self.farmable_fraction,
            "capacity_density_kwp_per_acre": self.capacity / (self.land_area / ACRE_M2),
            "empty": self.empty,
        }


def fit_count(edge: float, item: float, gap: float) -> int:
    """Largest n with n*item + (n-1)*gap <= edge."""
    if item <= 0 or gap < 0:
        raise InputError("item size must be > 0 and gap >= 0")
    return max(0, math.floor((edge + gap) / (item + gap) + _EPS))


def _check_gaps(*gaps):
    for g in gaps:
        if g < 0:
            raise InputError(f"gaps and spacings must be >= 0, got {g}")


def pack_conventional(land: LandParcel, spec: ModuleSpec, tilt: float, inter_row: float,
                      inter_module_gap: float = 0.003, surface_azimuth: float = 180.0,
                      landscape: bool = False, strings_per_table: int = 1,
                      technology: str = "MM") -> PlantLayout:
    """Tilted rows: each row's depth is the horizontal projection of its tables."""
    _check_gaps(inter_row, inter_module_gap)
    if strings_per_table < 1:
        raise InputError("strings_per_table must be >= 1")
    along = spec.length if landscape else spec.width
    slant = (spec.width if landscape else spec.length) * strings_per_table
    depth = slant * math.cos(math.radians(tilt))
    per_row = fit_count(land.length, along, inter_module_gap)
    # a vertical table has zero depth; it still occupies its own row
    rows = fit_count(land.width, max(depth, _EPS), inter_row)
    if per_row == 0:
        rows = 0
    pitch = depth + inter_row
    mounting = MountingConfig(tilt, surface_azimuth, pitch, 0.5,
                              make_label(surface_azimuth, tilt, technology), landscape)
    footprint = per_row * rows * along * depth
    return PlantLayout(mounting, spec.name, spec.p_max, per_row, rows, inter_module_gap, pitch,
                       0.0, footprint, land.area)


def pack_vertical(land: LandParcel, spec: ModuleSpec, inter_row: float = 3.0,
                  structure_width: float = 0.3, landscape: bool = True,
                  inter_module_gap: float = 0.003, tilt: float = 81.0,
                  surface_azimuth: float = 180.0, technology: str = "B") -> PlantLayout:
    """Near-vertical rows whose ground footprint is the mounting structure."""
    _check_gaps(inter_row, inter_module_gap)
    if structure_width <= 0:
        raise InputError("structure_width must be > 0")
    along = spec.length if landscape else spec.width
    per_row = fit_count(land.length, along, inter_module_gap)
    rows = fit_count(land.width, structure_width, inter_row) if per_row else 0
    pitch = structure_width + inter_row
    mounting = MountingConfig(tilt, surface_azimuth, pitch, 0.5,
                              make_label(surface_azimuth, tilt, technology), landscape)
    row_length = per_row * along + max(per_row - 1, 0) * inter_module_gap
    footprint = rows * row_length * structure_width
    return PlantLayout(mounting, spec.name, spec.p_max, per_row, rows, inter_module_gap, pitch,
                       structure_width, footprint, land.area)


def tractor_clearance_pitch(tractor_width: float, side_clearance: float) -> float:
    if tractor_width <= 0 or side_clearance < 0:
        raise InputError("tractor width must be > 0 and clearance >= 0")
    return tractor_width + 2.0 * side_clearance


def capacity_density(layout: PlantLayout, land: LandParcel) -> float:
    """kWp per acre."""
    return layout.capacity / land.acres


def farmable_fraction(layout: PlantLayout, land: LandParcel) -> float:
    if layout.footprint_area > land.area * (1 + 1e-12):
        raise InputError("layout footprint exceeds the land area")
    return max(1.0 - layout.footprint_area / land.area, 0.0)


def design_inter_row(module_slant: float, tilt: float, sun_azimuth: float = 48.0,
                     sun_elevation: float = 27.0) -> float:
    """Clear spacing behind a row at the worst-case sun (default: winter-solstice design point)."""
    return min_row_spacing(RowGeometry(module_slant, tilt), sun_azimuth, sun_elevation, "height")


# Reference utility-scale plants: (name, capacity kWp, area acres, printed kWp/acre)
REFERENCE_PLANTS = (
    ("Vankal", 2.0e4, 194.0, 103.09),
    ("Bhadla", 2.25e6, 14000.0, 160.36),
    ("Pavagada", 2.05e6, 13000.0, 157.69),
    ("Kurnool", 1.00e6, 5932.0, 168.58),
    ("Welspun MP", 1.51e5, 750.0, 201.33),
)


def reference_density_check(threshold: float = 0.005):
    """Recompute kWp/acre for the reference plants and flag printed values off by > threshold."""
    rows = []
    for name, kwp, acres, printed in REFERENCE_PLANTS:
        computed = kwp / acres
        delta = printed / computed - 1.0
        rows.append({"name": name, "computed": computed, "printed": printed,
                     "relative_delta": delta, "flagged": abs(delta) > threshold})
    return rows


def write_layout_json(layout: PlantLayout, path) -> None:
    with open(Path(path), "w", encoding="utf-8") as fh:
        json.dump(layout.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
