"""Bundled locations, configurations and one-acre plant designs."""

from __future__ import annotations

from .errors import InputError
from .module_model import ModuleSpec, bundled_modules
from .mounting import TECHNOLOGY_MODULE, MountingConfig
from .plant_layout import LandParcel, PlantLayout, design_inter_row, pack_conventional, pack_vertical
from .simulation import Plant
from .solar_geometry import Location

IST = 5.5

LOCATIONS = {
    "raipur": Location(21.16, 81.65, IST, 0.2, "Raipur"),
    "leh": Location(34.16, 77.58, IST, 0.2, "Leh"),
    "palakkad": Location(10.77, 76.65, IST, 0.2, "Palakkad"),
}

CONFIGURATION_LABELS = ("SF81B", "EF81B", "SF81MM", "SF81PM", "SF21PM", "SF21MM")

CONVENTIONAL_TILT = 23.0
INTER_MODULE_GAP = 0.003
VERTICAL_INTER_ROW = 3.0
STRUCTURE_WIDTH = 0.3
PLANT_PRESETS = ("conventional", "conventional-poly", "vertical-sn", "vertical-ew")


def location(name: str) -> Location:
    try:
        return LOCATIONS[name.lower()]
    except KeyError:
        raise InputError(f"unknown location {name!r}; choose from {sorted(LOCATIONS)}") from None


def module(key: str) -> ModuleSpec:
    modules = bundled_modules()
    if key not in modules:
        raise InputError(f"unknown module {key!r}; choose from {sorted(modules)}")
    return modules[key]


def module_for_label(label: str) -> ModuleSpec:
    return module(TECHNOLOGY_MODULE[MountingConfig.from_label(label).technology])


def configuration(label: str) -> Plant:
    """A single module mounted per one of the bundled labels (no neighbouring rows)."""
    return Plant(module_for_label(label), MountingConfig.from_label(label))


def plant_layout(name: str, land: LandParcel | None = None,
                 conventional_tilt: float = CONVENTIONAL_TILT) -> PlantLayout:
    land = land or LandParcel.square_acres(1.0)
    if name in ("conventional", "conventional-poly"):
        key, tech = (("vikram_mono_375", "MM") if name == "conventional" else ("vikram_poly_330", "PM"))
        spec = module(key)
        inter_row = design_inter_row(spec.length, conventional_tilt)
        return pack_conventional(land, spec, conventional_tilt, inter_row, INTER_MODULE_GAP,
                                 technology=tech)
    if name in ("vertical-sn", "vertical-ew"):
        azimuth = 180.0 if name == "vertical-sn" else 90.0
        return pack_vertical(land, module("adani_bifacial_355"), VERTICAL_INTER_ROW, STRUCTURE_WIDTH,
                             landscape=True, inter_module_gap=INTER_MODULE_GAP, tilt=81.0,
                             surface_azimuth=azimuth, technology="B")
    raise InputError(f"unknown plant preset {name!r}; choose from {list(PLANT_PRESETS)}")


def plant(name: str, land: LandParcel | None = None, site: Location | None = None) -> Plant:
    """A preset one-acre plant. With ``site`` given, the conventional plant tilts at its latitude."""
    tilt = CONVENTIONAL_TILT
    if site is not None and name.startswith("conventional"):
        tilt = float(round(abs(site.latitude)))
    layout = plant_layout(name, land, tilt)
    return Plant(module(TECHNOLOGY_MODULE[layout.mounting.technology]), layout.mounting, layout=layout)


def resolve_plant(name: str, site: Location | None = None) -> Plant:
    """Plant preset name or configuration label."""
    if name in PLANT_PRESETS:
        return plant(name, site=site)
    return configuration(name)
