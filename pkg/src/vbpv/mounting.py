"""Mounting configuration and the configuration-label grammar.

Labels are a face letter, ``F``, the tilt in degrees and a technology
code, e.g. ``EF81B`` (east-facing bifacial at 81 deg) or ``SF21MM``
(south-facing monocrystalline monofacial at 21 deg).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InputError

LABEL_RE = re.compile(r"^([SENW])F(\d{1,2})(B|MM|PM)$")
FACE_AZIMUTH = {"N": 0.0, "E": 90.0, "S": 180.0, "W": 270.0}
TECHNOLOGY_MODULE = {
    "MM": "vikram_mono_375",
    "PM": "vikram_poly_330",
    "B": "adani_bifacial_355",
}


@dataclass(frozen=True)
class MountingConfig:
    """How a module row is mounted.

    ``row_pitch`` (m, row to row along the facing direction) is None for
    an isolated row, which disables inter-row shading. ``landscape`` puts
    the module's short side along the tilt direction.
    """

    tilt: float
    surface_azimuth: float = 180.0
    row_pitch: float | None = None
    lower_edge: float = 0.5
    label: str = ""
    landscape: bool = False

    def __post_init__(self):
        if not 0.0 <= self.tilt <= 90.0:
            raise InputError(f"tilt must be within [0, 90], got {self.tilt}")
        if not 0.0 <= self.surface_azimuth < 360.0:
            raise InputError(f"surface_azimuth must be within [0, 360), got {self.surface_azimuth}")
        if self.row_pitch is not None and self.row_pitch <= 0:
            raise InputError("row_pitch must be > 0")
        if self.lower_edge < 0:
            raise InputError("lower_edge must be >= 0")
        if self.label:
            face, tilt, _ = parse_label(self.label)
            if abs(tilt - self.tilt) > 1e-9 or FACE_AZIMUTH[face] != self.surface_azimuth:
                raise InputError(f"label {self.label} disagrees with tilt/azimuth "
                                 f"{self.tilt}/{self.surface_azimuth}")

    @classmethod
    def from_label(cls, label: str, row_pitch: float | None = None, lower_edge: float = 0.5,
                   landscape: bool = False) -> "MountingConfig":
        face, tilt, _ = parse_label(label)
        return cls(tilt, FACE_AZIMUTH[face], row_pitch, lower_edge, label, landscape)

    @property
    def technology(self) -> str | None:
        return parse_label(self.label)[2] if self.label else None

    def slant_width(self, module_length: float, module_width: float) -> float:
        """Module dimension along the tilt direction."""
        return module_width if self.landscape else module_length

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "tilt": self.tilt,
            "surface_azimuth": self.surface_azimuth,
            "row_pitch": self.row_pitch,
            "lower_edge": self.lower_edge,
            "landscape": self.landscape,
        }


def parse_label(label: str) -> tuple[str, float, str]:
    """Split a label into (face letter, tilt, technology code)."""
    m = LABEL_RE.match(label)
    if m is None:
        raise InputError(f"label {label!r} does not match <S|E|N|W>F<tilt><B|MM|PM>")
    return m.group(1), float(m.group(2)), m.group(3)


def make_label(surface_azimuth: float, tilt: float, technology: str) -> str:
    faces = {v: k for k, v in FACE_AZIMUTH.items()}
    face = faces.get(float(surface_azimuth))
    if face is None or technology not in TECHNOLOGY_MODULE or not 0 <= tilt <= 99 or tilt != int(tilt):
        return ""
    return f"{face}F{int(tilt)}{technology}"
