"""Simulation and layout design for vertical bifacial and tilted PV plants."""

from .errors import (
    ComparisonError,
    ComputationError,
    CoverageError,
    ExtractionError,
    InputError,
    OrderingError,
    SunBelowHorizonError,
    SweepTooLargeError,
    UnsupportedLatitudeError,
    WeatherParseError,
)
from .module_model import ModuleSpec, SingleDiodeParams, ThermalParams, bundled_modules, extract_single_diode
from .mounting import MountingConfig
from .plant_layout import LandParcel, PlantLayout, pack_conventional, pack_vertical
from .simulation import Plant, SimulationResult, simulate
from .solar_geometry import Location, RowGeometry, SunPosition, solar_position

__all__ = [
    "ComparisonError", "ComputationError", "CoverageError", "ExtractionError", "InputError",
    "OrderingError", "SunBelowHorizonError", "SweepTooLargeError", "UnsupportedLatitudeError",
    "WeatherParseError", "ModuleSpec", "SingleDiodeParams", "ThermalParams", "bundled_modules",
    "extract_single_diode", "MountingConfig", "LandParcel", "PlantLayout", "pack_conventional",
    "pack_vertical", "Plant", "SimulationResult", "simulate", "Location", "RowGeometry",
    "SunPosition", "solar_position",
]

__version__ = "0.1.0"
