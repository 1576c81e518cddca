"""Weather series, clear-sky driver, GHI decomposition and POA transposition.

Transposition uses the isotropic-sky model on each face of a module. The
rear face of a module with tilt ``b`` and azimuth ``g`` is treated as a
surface with tilt ``180 - b`` and azimuth ``g + 180``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError, OrderingError, WeatherParseError
from .solar_geometry import Location, SunPosition, cos_incidence, local_datetime64, sun_angles

SOLAR_CONSTANT = 1367.0
MAX_IRRADIANCE = 2000.0
SOURCE_FLAGS = ("measured", "clearsky", "decomposed")
CSV_HEADER = ["timestamp", "ghi_wm2", "dhi_wm2", "dni_wm2", "tamb_c"]


@dataclass(frozen=True)
class WeatherSample:
    timestamp: datetime
    ghi: float
    dhi: float
    dni: float
    ambient_temp: float
    source_flag: str = "measured"

    def __post_init__(self):
        _check_ranges(self.ghi, self.dhi)
        if self.source_flag not in SOURCE_FLAGS:
            raise InputError(f"unknown source flag {self.source_flag!r}")


def _check_ranges(ghi, dhi):
    if not (0.0 <= dhi <= ghi <= MAX_IRRADIANCE):
        raise InputError(f"need 0 <= dhi <= ghi <= {MAX_IRRADIANCE:g} W/m2, got ghi={ghi}, dhi={dhi}")


@dataclass(frozen=True)
class WeatherSeries:
    """Immutable, time-sorted weather samples stored column-wise.

    ``dni`` holds NaN where the source did not provide it.
    """

    timestamps: tuple
    ghi: np.ndarray
    dhi: np.ndarray
    dni: np.ndarray
    tamb: np.ndarray
    source_flags: tuple = ()
    gaps: tuple = field(default=())

    def __post_init__(self):
        n = len(self.timestamps)
        for name in ("ghi", "dhi", "dni", "tamb"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise InputError(f"column {name} has {arr.shape} values, expected {n}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.source_flags:
            object.__setattr__(self, "source_flags", ("measured",) * n)
        if not self.gaps:
            object.__setattr__(self, "gaps", find_gaps(self.timestamps))

    def __len__(self):
        return len(self.timestamps)

    def __getitem__(self, i) -> WeatherSample:
        return WeatherSample(self.timestamps[i], float(self.ghi[i]), float(self.dhi[i]),
                             float(self.dni[i]), float(self.tamb[i]), self.source_flags[i])

    @property
    def epoch_seconds(self) -> np.ndarray:
        return np.array([t.timestamp() for t in self.timestamps], dtype=float)

    @classmethod
    def from_samples(cls, samples: Sequence[WeatherSample]) -> "WeatherSeries":
        samples = list(samples)
        _check_order([s.timestamp for s in samples])
        return cls(
            tuple(s.timestamp for s in samples),
            np.array([s.ghi for s in samples], dtype=float),
            np.array([s.dhi for s in samples], dtype=float),
            np.array([s.dni for s in samples], dtype=float),
            np.array([s.ambient_temp for s in samples], dtype=float),
            tuple(s.source_flag for s in samples),
        )


def _check_order(timestamps):
    for i in range(1, len(timestamps)):
        if timestamps[i] <= timestamps[i - 1]:
            raise OrderingError(
                f"timestamps must be strictly increasing: {timestamps[i - 1].isoformat()} "
                f"then {timestamps[i].isoformat()}"
            )


def find_gaps(timestamps, factor: float = 1.5):
    """(start, end) pairs where spacing exceeds ``factor`` times the median step."""
    if len(timestamps) < 3:
        return ()
    secs = np.array([t.timestamp() for t in timestamps])
    dt = np.diff(secs)
    limit = factor * np.median(dt)
    return tuple((timestamps[i], timestamps[i + 1]) for i in np.flatnonzero(dt > limit))


@dataclass(frozen=True)
class FaceIrradiance:
    beam: float
    diffuse: float
    ground_reflected: float
    shading_fraction_applied: float = 0.0

    @property
    def total(self):
        return self.beam + self.diffuse + self.ground_reflected


@dataclass(frozen=True)
class PoaIrradiance:
    front_face: FaceIrradiance
    rear_face: FaceIrradiance

    @property
    def front(self):
        return self.front_face.total

    @property
    def rear(self):
        return self.rear_face.total


# ---------------------------------------------------------------------------
# Clear sky and decomposition


def clearsky_ghi(sun_elevation):
    """Haurwitz clear-sky GHI in W/m2; zero with the sun at or below the horizon."""
    el = np.asarray(sun_elevation, dtype=float)
    s = np.sin(np.radians(np.clip(el, 0.0, 90.0)))
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ghi = 1098.0 * s * np.exp(-0.057 / s)
    out = np.where(el > 0, ghi, 0.0)
    return float(out) if out.ndim == 0 else out


def extraterrestrial_normal(day_of_year=None):
    """Extraterrestrial normal irradiance; the mean solar constant if no day is given."""
    if day_of_year is None:
        return SOLAR_CONSTANT
    return SOLAR_CONSTANT * (1.0 + 0.033 * np.cos(2 * np.pi * np.asarray(day_of_year) / 365.0))


def erbs_diffuse_fraction(kt):
    kt = np.asarray(kt, dtype=float)
    mid = 0.9511 - 0.1604 * kt + 4.388 * kt**2 - 16.638 * kt**3 + 12.336 * kt**4
    return np.where(kt <= 0.22, 1.0 - 0.09 * kt, np.where(kt <= 0.8, mid, 0.165))


def decompose_ghi(ghi, sun_elevation, day_of_year=None, strict: bool = True):
    """Split GHI into (DHI, DNI) with the Erbs clearness-index correlation.

    The split preserves ``dhi + dni*sin(elevation) == ghi``. DNI is capped
    at the extraterrestrial value, with any excess returned to DHI. With
    ``strict`` a positive GHI below the horizon raises; otherwise it is
    treated as fully diffuse.
    """
    ghi_a = np.asarray(ghi, dtype=float)
    el = np.asarray(sun_elevation, dtype=float)
    if np.any(ghi_a < 0):
        raise InputError("ghi must be >= 0")
    night = el <= 0
    if strict and np.any(night & (ghi_a > 0)):
        raise InputError("positive GHI with the sun at or below the horizon")
    sin_el = np.sin(np.radians(np.clip(el, 0.0, 90.0)))
    e0 = extraterrestrial_normal(day_of_year)
    with np.errstate(divide="ignore", invalid="ignore"):
        kt = np.where(night, 0.0, ghi_a / (e0 * sin_el))
        dhi = ghi_a * erbs_diffuse_fraction(kt)
        dni = np.where(night, 0.0, (ghi_a - dhi) / sin_el)
    over = dni > e0
    if np.any(over):
        dni = np.where(over, e0, dni)
        dhi = np.where(over, ghi_a - e0 * sin_el, dhi)
    dhi = np.where(night, ghi_a, dhi)
    if dhi.ndim == 0:
        return float(dhi), float(dni)
    return dhi, dni


# ---------------------------------------------------------------------------
# Transposition


def _cosd(deg):
    # exact at multiples of 90 so that the vertical view factors are exactly 1/2
    q, r = divmod(deg, 90.0)
    if r == 0.0:
        return (1.0, 0.0, -1.0, 0.0)[int(q) % 4]
    return math.cos(math.radians(deg))


def transpose_components(ghi, dhi, dni, sun_elevation, sun_azimuth, tilt, surface_azimuth,
                         albedo, shading_fraction=0.0):
    """Vectorized isotropic transposition; returns (beam, diffuse, ground)."""
    cos_t = cos_incidence(sun_elevation, sun_azimuth, tilt, surface_azimuth)
    up = np.asarray(sun_elevation) > 0
    beam = np.where(up, np.asarray(dni) * np.maximum(cos_t, 0.0), 0.0)
    beam = beam * (1.0 - np.asarray(shading_fraction))
    ct = _cosd(tilt)
    diffuse = np.asarray(dhi) * (1.0 + ct) / 2.0
    ground = np.asarray(ghi) * albedo * (1.0 - ct) / 2.0
    # cos(90 deg) leaves a tiny negative; keep components non-negative
    return np.maximum(beam, 0.0), np.maximum(diffuse, 0.0), np.maximum(ground, 0.0)


def transpose_poa(sample: WeatherSample, sun: SunPosition, tilt: float, surface_azimuth: float,
                  albedo: float, shading_fraction: float = 0.0) -> FaceIrradiance:
    """Plane-of-array irradiance on one face."""
    if not 0.0 <= tilt <= 180.0:
        raise InputError(f"tilt must be within [0, 180], got {tilt}")
    if not 0.0 <= shading_fraction <= 1.0:
        raise InputError(f"shading fraction must be within [0, 1], got {shading_fraction}")
    values = (sample.ghi, sample.dhi, sample.dni, sun.elevation, sun.azimuth, albedo)
    if not all(math.isfinite(v) for v in values):
        raise InputError("transposition inputs must be finite")
    b, d, g = transpose_components(sample.ghi, sample.dhi, sample.dni, sun.elevation, sun.azimuth,
                                   tilt, surface_azimuth, albedo, shading_fraction)
    return FaceIrradiance(float(b), float(d), float(g), shading_fraction)


def rear_orientation(tilt: float, surface_azimuth: float) -> tuple[float, float]:
    return 180.0 - tilt, (surface_azimuth + 180.0) % 360.0


def bifacial_poa(sample: WeatherSample, sun: SunPosition, mounting, albedo: float,
                 front_shading: float = 0.0, rear_shading: float = 0.0) -> PoaIrradiance:
    """Front and rear POA for a mounting with ``tilt`` and ``surface_azimuth`` attributes."""
    front = transpose_poa(sample, sun, mounting.tilt, mounting.surface_azimuth, albedo, front_shading)
    rt, ra = rear_orientation(mounting.tilt, mounting.surface_azimuth)
    rear = transpose_poa(sample, sun, rt, ra, albedo, rear_shading)
    return PoaIrradiance(front, rear)


def equivalent_irradiance(front, rear, bifaciality):
    """Front irradiance plus bifaciality-weighted rear irradiance."""
    if not 0.0 <= bifaciality <= 1.0:
        raise InputError(f"bifaciality must be within [0, 1], got {bifaciality}")
    if np.any(np.asarray(front) < 0) or np.any(np.asarray(rear) < 0):
        raise InputError("irradiance must be >= 0")
    return front + bifaciality * rear


# ---------------------------------------------------------------------------
# Weather sources


def clearsky_weather(location: Location, timestamps: Sequence[datetime],
                     ambient_temp: float = 25.0,
                     equation_of_time_correction: bool = True) -> WeatherSeries:
    """Synthetic clear-sky series: Haurwitz GHI split by Erbs, constant ambient."""
    el, _ = sun_angles(location, local_datetime64(location, timestamps), equation_of_time_correction)
    ghi = clearsky_ghi(el)
    doy = np.array([t.timetuple().tm_yday for t in timestamps])
    dhi, dni = decompose_ghi(ghi, el, doy, strict=False)
    n = len(timestamps)
    stamps = tuple(t if t.tzinfo else t.replace(tzinfo=location.tzinfo) for t in timestamps)
    return WeatherSeries(stamps, ghi, np.minimum(dhi, ghi), dni, np.full(n, float(ambient_temp)),
                         ("clearsky",) * n)


def fill_missing_dni(series: WeatherSeries, location: Location) -> WeatherSeries:
    """Decompose GHI wherever DNI is missing, flagging those samples."""
    missing = np.isnan(series.dni)
    if not missing.any():
        return series
    el, _ = sun_angles(location, local_datetime64(location, series.timestamps))
    doy = np.array([t.timetuple().tm_yday for t in series.timestamps])
    dhi_d, dni_d = decompose_ghi(series.ghi, el, doy, strict=False)
    # measured DHI is kept; DNI closes the balance where the sun is up
    sin_el = np.sin(np.radians(np.clip(el, 0.0, 90.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        dni_closed = np.where(el > 0, (series.ghi - series.dhi) / sin_el, 0.0)
    dni = np.where(missing, np.minimum(dni_closed, extraterrestrial_normal(doy)), series.dni)
    flags = tuple("decomposed" if m else f for m, f in zip(missing, series.source_flags))
    return WeatherSeries(series.timestamps, series.ghi, series.dhi, dni, series.tamb, flags, series.gaps)


def _parse_float(text, name, line, allow_empty=False):
    text = text.strip()
    if text == "":
        if allow_empty:
            return math.nan
        raise WeatherParseError(f"missing value for {name}", line)
    try:
        v = float(text)
    except ValueError:
        raise WeatherParseError(f"cannot parse {name}={text!r} as a number", line) from None
    if not math.isfinite(v):
        raise WeatherParseError(f"{name} must be finite", line)
    return v


def _parse_timestamp(text, line):
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        raise WeatherParseError(f"bad ISO-8601 timestamp {text!r}", line) from None
    if ts.tzinfo is None:
        raise WeatherParseError(f"timestamp {text!r} lacks a UTC offset", line)
    return ts


def load_weather_csv(path, location: Location | None = None) -> WeatherSeries:
    """Read and validate a weather CSV.

    With ``location`` given, samples that carry all three components are
    checked for closure ``ghi ~= dhi + dni*sin(el)`` within 5%.
    """
    rows = []
    with open(Path(path), encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_HEADER:
            raise WeatherParseError(f"expected header {','.join(CSV_HEADER)}", 1)
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(CSV_HEADER):
                raise WeatherParseError(f"expected {len(CSV_HEADER)} fields, got {len(rec)}", lineno)
            ts = _parse_timestamp(rec[0], lineno)
            ghi = _parse_float(rec[1], "ghi_wm2", lineno)
            dhi = _parse_float(rec[2], "dhi_wm2", lineno)
            dni = _parse_float(rec[3], "dni_wm2", lineno, allow_empty=True)
            tamb = _parse_float(rec[4], "tamb_c", lineno)
            try:
                _check_ranges(ghi, dhi)
            except InputError as exc:
                raise WeatherParseError(str(exc), lineno) from None
            if not math.isnan(dni) and dni < 0:
                raise WeatherParseError("dni must be >= 0", lineno)
            rows.append((lineno, ts, ghi, dhi, dni, tamb))

    for (_, prev, *_a), (lineno, ts, *_b) in zip(rows, rows[1:]):
        if ts <= prev:
            raise OrderingError(f"line {lineno}: timestamp {ts.isoformat()} not after {prev.isoformat()}")

    series = WeatherSeries(
        tuple(r[1] for r in rows),
        np.array([r[2] for r in rows], dtype=float),
        np.array([r[3] for r in rows], dtype=float),
        np.array([r[4] for r in rows], dtype=float),
        np.array([r[5] for r in rows], dtype=float),
    )
    if location is not None and len(series):
        el, _ = sun_angles(location, local_datetime64(location, series.timestamps))
        recon = series.dhi + series.dni * np.sin(np.radians(np.clip(el, 0, 90)))
        full = ~np.isnan(series.dni) & (series.ghi > 50.0)
        bad = full & (np.abs(recon - series.ghi) > 0.05 * series.ghi)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise WeatherParseError(
                f"ghi {series.ghi[i]} does not match dhi + dni*sin(elevation) = {recon[i]:.1f}",
                rows[i][0],
            )
    return series


def write_weather_csv(series: WeatherSeries, path) -> None:
    """Write a series so that :func:`load_weather_csv` restores it exactly."""
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i, ts in enumerate(series.timestamps):
            dni = series.dni[i]
            w.writerow([
                ts.isoformat(), repr(float(series.ghi[i])), repr(float(series.dhi[i])),
                "" if math.isnan(dni) else repr(float(dni)), repr(float(series.tamb[i])),
            ])
