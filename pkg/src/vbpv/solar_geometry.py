"""Sun position, day events, sun-path tables and row-to-row shading geometry.

Angles are in degrees throughout. Azimuths are measured clockwise from
north, so due south is 180. Timestamps are civil local time; naive
datetimes are interpreted at the location's fixed UTC offset.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import InputError, SunBelowHorizonError, UnsupportedLatitudeError

MAX_SUPPORTED_LATITUDE = 66.0
MIN_YEAR, MAX_YEAR = 1901, 2099


@dataclass(frozen=True)
class Location:
    latitude: float
    longitude: float
    utc_offset: float = 0.0
    albedo: float = 0.20
    name: str = ""

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise InputError(f"latitude must be within [-90, 90], got {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise InputError(f"longitude must be within [-180, 180], got {self.longitude}")
        if not -14.0 <= self.utc_offset <= 14.0:
            raise InputError(f"utc_offset must be within [-14, 14] hours, got {self.utc_offset}")
        if not 0.0 <= self.albedo <= 1.0:
            raise InputError(f"albedo must be within [0, 1], got {self.albedo}")

    @property
    def tzinfo(self) -> timezone:
        return timezone(timedelta(hours=self.utc_offset))


@dataclass(frozen=True)
class SunPosition:
    elevation: float
    azimuth: float
    timestamp: datetime | None = None


@dataclass(frozen=True)
class RowGeometry:
    """Cross-section of one module row.

    ``module_slant_width`` is the module dimension along the tilt direction.
    ``upper_edge_height`` defaults to ``lower_edge_height + W*sin(tilt)``.
    """

    module_slant_width: float
    tilt: float
    surface_azimuth: float = 180.0
    lower_edge_height: float = 0.0
    upper_edge_height: float | None = None
    row_pitch: float | None = None

    def __post_init__(self):
        if self.module_slant_width <= 0:
            raise InputError("module_slant_width must be > 0")
        if not 0.0 <= self.tilt <= 90.0:
            raise InputError(f"tilt must be within [0, 90], got {self.tilt}")
        if self.row_pitch is not None and self.row_pitch <= 0:
            raise InputError("row_pitch must be > 0")
        rise = self.module_slant_width * math.sin(math.radians(self.tilt))
        expected = self.lower_edge_height + rise
        if self.upper_edge_height is None:
            object.__setattr__(self, "upper_edge_height", expected)
        elif abs(self.upper_edge_height - expected) > 1e-6:
            raise InputError(
                f"upper_edge_height {self.upper_edge_height} inconsistent with "
                f"lower edge + W*sin(tilt) = {expected:.6f}"
            )

    @classmethod
    def from_heights(cls, lower, upper, tilt, surface_azimuth=180.0, row_pitch=None):
        """Build a row from its edge heights, back-solving the slant width."""
        s = math.sin(math.radians(tilt))
        if s <= 0 or upper <= lower:
            raise InputError("need tilt > 0 and upper edge above lower edge")
        return cls((upper - lower) / s, tilt, surface_azimuth, lower, upper, row_pitch)


# ---------------------------------------------------------------------------
# Declination and equation of time


def solar_declination(day_of_year: int, method: str = "cooper") -> float:
    """Solar declination in degrees for an integer day of year.

    ``cooper`` is the classic single-sine formula
    ``23.45 * sin(360/365 * (284 + n))``; ``spencer`` is the 1971 Fourier
    series. Both are day-resolution approximations; :func:`solar_position`
    uses the more accurate almanac coordinates instead.
    """
    if isinstance(day_of_year, bool) or int(day_of_year) != day_of_year:
        raise InputError(f"day_of_year must be an integer, got {day_of_year!r}")
    if not 1 <= day_of_year <= 366:
        raise InputError(f"day_of_year must be within 1..366, got {day_of_year}")
    if method == "cooper":
        return 23.45 * math.sin(math.radians(360.0 / 365.0 * (284 + day_of_year)))
    if method == "spencer":
        return float(np.degrees(_spencer_declination(2 * math.pi * (day_of_year - 1) / 365.0)))
    raise InputError(f"unknown declination method {method!r}")


def _spencer_declination(gamma):
    """Declination in radians from the fractional year angle (radians)."""
    return (
        0.006918
        - 0.399912 * np.cos(gamma)
        + 0.070257 * np.sin(gamma)
        - 0.006758 * np.cos(2 * gamma)
        + 0.000907 * np.sin(2 * gamma)
        - 0.002697 * np.cos(3 * gamma)
        + 0.00148 * np.sin(3 * gamma)
    )


def _almanac(days_j2000):
    """Low-precision solar coordinates (Astronomical Almanac, Michalsky 1988).

    Returns declination and right ascension in radians plus the mean
    longitude in degrees, for days since 2000-01-01 12:00 UTC.
    """
    n = np.asarray(days_j2000, dtype=float)
    mean_long = np.mod(280.460 + 0.9856474 * n, 360.0)
    mean_anom = np.radians(np.mod(357.528 + 0.9856003 * n, 360.0))
    ecl_long = np.radians(mean_long + 1.915 * np.sin(mean_anom) + 0.020 * np.sin(2 * mean_anom))
    obliquity = np.radians(23.439 - 4.0e-7 * n)
    ra = np.arctan2(np.cos(obliquity) * np.sin(ecl_long), np.cos(ecl_long))
    decl = np.arcsin(np.sin(obliquity) * np.sin(ecl_long))
    return decl, ra, mean_long


def _eot_minutes(mean_long, ra):
    diff = np.mod(mean_long - np.degrees(ra) + 180.0, 360.0) - 180.0
    return 4.0 * diff


_J2000 = np.datetime64("2000-01-01T12:00:00", "ms")


def equation_of_time(day: date, hour_utc: float = 12.0) -> float:
    """Equation of time in minutes (apparent minus mean solar time)."""
    n = (np.datetime64(datetime.combine(day, time()), "ms") - _J2000).astype(np.int64) / 8.64e7
    _, ra, mean_long = _almanac(n + hour_utc / 24.0)
    return float(_eot_minutes(mean_long, ra))


# ---------------------------------------------------------------------------
# Sun position


def _to_local_naive(location: Location, ts: datetime) -> datetime:
    if ts.tzinfo is not None:
        ts = ts.astimezone(location.tzinfo).replace(tzinfo=None)
    if not MIN_YEAR <= ts.year <= MAX_YEAR:
        raise InputError(f"year {ts.year} outside supported range {MIN_YEAR}..{MAX_YEAR}")
    return ts


def local_datetime64(location: Location, timestamps: Iterable[datetime]) -> np.ndarray:
    """Convert datetimes to naive ``datetime64[ms]`` civil time at the site."""
    return np.array(
        [np.datetime64(_to_local_naive(location, t), "ms") for t in timestamps],
        dtype="datetime64[ms]",
    )


def sun_angles(location: Location, local_times, equation_of_time_correction: bool = True):
    """Vectorized (elevation, azimuth) arrays for civil local times.

    ``local_times`` is anything convertible to ``datetime64`` holding naive
    civil times at the location's UTC offset. Disabling the equation of
    time places the sun on the mean-solar-time hour angle, which makes the
    daily path symmetric about a fixed civil noon.
    """
    t = np.asarray(local_times, dtype="datetime64[ms]")
    utc = t - np.timedelta64(int(round(location.utc_offset * 3.6e6)), "ms")
    n = (utc - _J2000).astype(np.int64) / 8.64e7
    ut_hours = (utc - utc.astype("datetime64[D]")).astype(np.int64) / 3.6e6
    decl, ra, mean_long = _almanac(n)

    if equation_of_time_correction:
        gmst = np.mod(6.697375 + 0.0657098242 * n + ut_hours, 24.0)
        lmst = gmst + location.longitude / 15.0
        omega = np.radians(np.mod(lmst * 15.0 - np.degrees(ra) + 180.0, 360.0) - 180.0)
    else:
        omega = np.radians(15.0 * (ut_hours + location.longitude / 15.0 - 12.0))

    phi = math.radians(location.latitude)
    sin_el = math.sin(phi) * np.sin(decl) + math.cos(phi) * np.cos(decl) * np.cos(omega)
    elevation = np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))
    azimuth = np.degrees(
        np.arctan2(np.sin(omega), np.cos(omega) * math.sin(phi) - np.tan(decl) * math.cos(phi))
    )
    azimuth = np.mod(azimuth + 180.0, 360.0)
    return elevation, azimuth


def solar_position(location: Location, timestamp: datetime) -> SunPosition:
    local = _to_local_naive(location, timestamp)
    el, az = sun_angles(location, np.datetime64(local, "ms"))
    stamp = timestamp if timestamp.tzinfo else timestamp.replace(tzinfo=location.tzinfo)
    return SunPosition(float(el), float(az) % 360.0, stamp)


def solar_noon(location: Location, day: date) -> datetime:
    """Civil time of solar noon (sun crossing the local meridian)."""
    offset_min = 4.0 * (location.longitude - 15.0 * location.utc_offset)
    guess = 12.0 - (offset_min + equation_of_time(day, 12.0 - location.utc_offset)) / 60.0
    base = datetime.combine(day, time())
    t = base + timedelta(hours=guess)
    return t.replace(tzinfo=location.tzinfo)


def _elevation_at_hours(location: Location, day: date):
    base = np.datetime64(datetime.combine(day, time()), "ms")

    def f(h):
        t = base + np.timedelta64(int(round(h * 3.6e6)), "ms")
        return float(sun_angles(location, t)[0])

    return f


def sunrise_sunset(location: Location, day: date) -> tuple[datetime, datetime]:
    """Times at which the geometric sun centre crosses the 0 deg horizon."""
    if abs(location.latitude) > MAX_SUPPORTED_LATITUDE:
        raise UnsupportedLatitudeError(
            f"latitude {location.latitude} beyond +/-{MAX_SUPPORTED_LATITUDE} is not supported"
        )
    if isinstance(day, datetime):
        day = day.date()
    noon = solar_noon(location, day)
    t_noon = noon.hour + noon.minute / 60 + noon.second / 3600 + noon.microsecond / 3.6e9
    f = _elevation_at_hours(location, day)
    if f(t_noon) <= 0 or f(t_noon - 12) >= 0 or f(t_noon + 12) >= 0:
        raise UnsupportedLatitudeError(f"no sunrise/sunset on {day} at latitude {location.latitude}")
    rise = brentq(f, t_noon - 12, t_noon, xtol=1e-6)
    sets = brentq(f, t_noon, t_noon + 12, xtol=1e-6)
    base = datetime.combine(day, time(), tzinfo=location.tzinfo)
    return base + timedelta(hours=rise), base + timedelta(hours=sets)


def sun_path_table(location: Location, dates: Sequence[date], step_minutes: float) -> list[SunPosition]:
    """Daylight sun positions on a clock-aligned grid starting at local midnight."""
    if step_minutes < 1:
        raise InputError(f"step must be >= 1 minute, got {step_minutes}")
    step = np.timedelta64(int(round(step_minutes * 60_000)), "ms")
    rows = []
    for day in sorted(set(dates)):
        start = np.datetime64(datetime.combine(day, time()), "ms")
        n = int(np.timedelta64(1, "D") // step) + 1
        grid = start + step * np.arange(n)
        grid = grid[grid < start + np.timedelta64(1, "D")]
        el, az = sun_angles(location, grid)
        for t, e, a in zip(grid, el, az):
            if e > 0:
                stamp = t.astype(datetime).replace(tzinfo=location.tzinfo)
                rows.append(SunPosition(float(e), float(a) % 360.0, stamp))
    return rows


def write_sun_path_csv(rows: Sequence[SunPosition], path) -> None:
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp_iso8601", "elevation_deg", "azimuth_deg"])
        for r in rows:
            w.writerow([r.timestamp.isoformat(), f"{r.elevation:.6f}", f"{r.azimuth:.6f}"])


# ---------------------------------------------------------------------------
# Surface geometry


def _cos_sin_deg(deg):
    """Cosine and sine of an angle in degrees, exact at multiples of 90."""
    deg = np.asarray(deg, dtype=float)
    rad = np.radians(deg)
    c, s = np.cos(rad), np.sin(rad)
    q = np.mod(deg, 360.0)
    c = np.where(q == 90.0, 0.0, np.where(q == 270.0, 0.0, np.where(q == 180.0, -1.0, c)))
    s = np.where(q == 180.0, 0.0, np.where(q == 90.0, 1.0, np.where(q == 270.0, -1.0, s)))
    return c, s


def cos_incidence(sun_elevation, sun_azimuth, tilt, surface_azimuth):
    """Cosine of the angle between the sun vector and a surface normal.

    Vectorized; tilt may exceed 90 for downward-facing (rear) faces.
    """
    a = np.radians(sun_elevation)
    cos_b, sin_b = _cos_sin_deg(tilt)
    return np.sin(a) * cos_b + np.cos(a) * sin_b * np.cos(
        np.radians(np.asarray(sun_azimuth) - surface_azimuth)
    )


def incidence_angle(sun: SunPosition, tilt: float, surface_azimuth: float) -> float:
    """Angle of incidence in [0, 180]; values >= 90 mean the sun is behind the face."""
    c = float(cos_incidence(sun.elevation, sun.azimuth, tilt, surface_azimuth))
    return math.degrees(math.acos(max(-1.0, min(1.0, c))))


def is_behind_surface(sun: SunPosition, tilt: float, surface_azimuth: float) -> bool:
    return incidence_angle(sun, tilt, surface_azimuth) >= 90.0


def min_row_spacing(row: RowGeometry, sun_azimuth: float, sun_elevation: float,
                    mode: str = "height") -> float:
    """Minimum clear ground distance between rows to avoid beam shading.

    ``sun_azimuth`` is measured from the row's facing direction (e.g. from
    due south for south-facing rows). ``mode="height"`` projects the
    vertical rise ``H - h`` of the row; ``mode="literal"`` projects the
    slant width ``W`` directly.
    """
    if sun_elevation <= 0:
        raise SunBelowHorizonError(f"sun elevation must be > 0, got {sun_elevation}")
    if sun_elevation > 90:
        raise InputError(f"sun elevation must be <= 90, got {sun_elevation}")
    if mode == "height":
        length = row.upper_edge_height - row.lower_edge_height
    elif mode == "literal":
        length = row.module_slant_width
    else:
        raise InputError(f"unknown spacing mode {mode!r}")
    d = length * math.cos(math.radians(sun_azimuth)) / math.tan(math.radians(sun_elevation))
    # cos(90 deg) leaves ~1e-17 residue
    return max(0.0, d) if abs(d) > 1e-12 else 0.0


def _shaded_fraction(slant, tilt, surface_azimuth, lower, pitch, sun_elevation, sun_azimuth, face_sign):
    """Vectorized core of :func:`row_shading_fraction`.

    Works in the row cross-section: x points horizontally toward the
    row's facing azimuth, z up. ``face_sign`` is +1 for the front face and
    -1 for the rear face.
    """
    el = np.radians(np.asarray(sun_elevation, dtype=float))
    daz = np.radians(np.asarray(sun_azimuth, dtype=float) - surface_azimuth)
    sx = np.cos(el) * np.cos(daz)
    sz = np.sin(el)
    b = math.radians(tilt)
    nx, nz = face_sign * math.sin(b), face_sign * math.cos(b)
    lit = (nx * sx + nz * sz > 0) & (sz > 0)

    # lower edge (0, lower), upper edge (-W cos b, lower + W sin b)
    ux, uz = -slant * math.cos(b), lower + slant * math.sin(b)
    # coordinate along the axis perpendicular to the sun rays
    c_lo = -sz * 0.0 + sx * lower
    c_hi = -sz * ux + sx * uz
    neighbour = np.where(sx >= 0, pitch, -pitch)
    shift = -sz * neighbour
    lo, hi = np.minimum(c_lo, c_hi), np.maximum(c_lo, c_hi)
    span = hi - lo
    overlap = np.clip(np.minimum(hi, hi + shift) - np.maximum(lo, lo + shift), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(span > 1e-12, overlap / span, 0.0)
    return np.where(lit, np.clip(frac, 0.0, 1.0), 0.0)


def row_shading_fraction(front_row: RowGeometry, rear_row_offset: float, sun: SunPosition,
                         face: str = "front") -> float:
    """Fraction of a row's slant width in the beam shadow of its neighbour.

    Infinite-row 2-D model: identical rows repeat every ``rear_row_offset``
    metres along the facing direction, and the neighbour on the sun side
    casts the shadow. Returns 0 when the face is not lit by the sun.
    """
    if rear_row_offset <= 0:
        raise InputError("row offset must be > 0")
    depth = front_row.module_slant_width * abs(math.cos(math.radians(front_row.tilt)))
    if rear_row_offset <= depth:
        raise InputError(f"row offset {rear_row_offset} m overlaps the row footprint {depth:.3f} m")
    sign = {"front": 1, "rear": -1}.get(face)
    if sign is None:
        raise InputError(f"face must be 'front' or 'rear', got {face!r}")
    return float(_shaded_fraction(
        front_row.module_slant_width, front_row.tilt, front_row.surface_azimuth,
        front_row.lower_edge_height, rear_row_offset, sun.elevation, sun.azimuth, sign,
    ))
