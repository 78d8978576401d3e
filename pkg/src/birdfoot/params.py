"""Leg, foot and protocol parameters shared by every other module.

All values are stored in SI units (m, N, N/m, N*m, rad where noted).  The
published tables use mm and N/mm; :func:`preset_configuration` and the config
readers convert at construction time.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

MM = 1e-3
N_PER_MM = 1e3
GRAVITY = 9.81


class ConfigurationNotFound(KeyError):
    pass


class Coupling(str, enum.Enum):
    LEG_LENGTH = "LegLength"
    TOE_JOINT = "ToeJoint"
    NONE = "None"


class FootKind(str, enum.Enum):
    TWO_SEGMENT = "TwoSegment"
    ONE_SEGMENT = "OneSegment"
    BALL = "Ball"
    CYLINDER = "Cylinder"


@dataclass(frozen=True)
class LegGeometry:
    """Segment lengths and radii of the pantograph leg [m]."""

    l_ls1: float = 160 * MM
    l_ls2: float = 160 * MM
    l_ls3: float = 160 * MM
    l_ts1: float = 39 * MM
    l_ts2: float = 39 * MM
    l_ts1s: float = 78 * MM
    r_j1: float = 26.6 * MM
    r_m: float = 47 * MM
    r_cf: float = 25 * MM
    r_bf: float = 21.5 * MM

    @property
    def max_leg_length(self) -> float:
        return self.l_ls1 + self.l_ls2 + self.l_ls3


# nominal projected sole area shared by all four feet
FOOT_AREA = 12e-4


@dataclass(frozen=True)
class FootGeometry:
    """Sole description.

    ``segment_lengths`` is empty for round feet, ``radius`` is ``None`` for
    segmented feet.  ``width`` is the out-of-plane extent used to turn the
    planar profile into bearing areas.
    """

    kind: FootKind
    segment_lengths: tuple = ()
    radius: Optional[float] = None
    width: float = 0.0
    contact_sample_count: int = 7

    @property
    def segmented(self) -> bool:
        return self.kind in (FootKind.TWO_SEGMENT, FootKind.ONE_SEGMENT)

    @property
    def sole_length(self) -> float:
        return float(sum(self.segment_lengths))

    @property
    def projected_area(self) -> float:
        if self.segmented:
            return self.sole_length * self.width
        if self.kind is FootKind.BALL:
            return math.pi * self.radius**2
        return 2.0 * self.radius * self.width


def two_segment_foot(geometry: LegGeometry = LegGeometry(), samples: int = 7) -> FootGeometry:
    lengths = (geometry.l_ts1, geometry.l_ts2)
    return FootGeometry(FootKind.TWO_SEGMENT, lengths, None, FOOT_AREA / sum(lengths), samples)


def one_segment_foot(geometry: LegGeometry = LegGeometry(), samples: int = 7) -> FootGeometry:
    lengths = (geometry.l_ts1s,)
    return FootGeometry(FootKind.ONE_SEGMENT, lengths, None, FOOT_AREA / sum(lengths), samples)


def ball_foot(geometry: LegGeometry = LegGeometry()) -> FootGeometry:
    return FootGeometry(FootKind.BALL, (), geometry.r_bf, 2.0 * geometry.r_bf, 1)


def cylinder_foot(geometry: LegGeometry = LegGeometry()) -> FootGeometry:
    r = geometry.r_cf
    return FootGeometry(FootKind.CYLINDER, (), r, FOOT_AREA / (2.0 * r), 1)


@dataclass(frozen=True)
class LegConfiguration:
    name: str
    coupling: Coupling
    foot: FootGeometry
    r_j2d: float
    r_j2p: Optional[float] = None
    r_j3: Optional[float] = None
    r_j4: Optional[float] = None
    k_GS: float = 2.2 * N_PER_MM
    k_BS: float = 5.9 * N_PER_MM
    k_TJ: float = 4.0 * N_PER_MM
    geometry: LegGeometry = field(default_factory=LegGeometry)

    def __post_init__(self):
        # the two ankle pulleys are rigidly connected; without a published
        # value the proximal one mirrors the distal one
        if self.r_j2p is None:
            object.__setattr__(self, "r_j2p", self.r_j2d)

    @property
    def has_tendon(self) -> bool:
        return self.coupling is not Coupling.NONE


@dataclass(frozen=True)
class ProtocolParams:
    """Push-protocol settings.  Angles in degrees, lengths in m."""

    hip_height: float = 0.41
    hip_torque: float = 2.0
    td_angle: float = 60.0
    station_step: float = 1e-3
    hanging_mass: float = 4.3


def hanging_mass_torque(protocol: ProtocolParams, geometry: LegGeometry = LegGeometry()) -> float:
    """Hip torque produced by the hanging mass acting on the hip pulley."""
    return protocol.hanging_mass * GRAVITY * geometry.r_m


# name: coupling, feet, r_j2d, r_j3, r_j4 [mm]
_TABLE = {
    "LL2SC1": (Coupling.LEG_LENGTH, 2, 13.5, 3.2, 1.0),
    "LL2SC2": (Coupling.LEG_LENGTH, 2, 13.5, 3.2, 2.5),
    "LL2SC3": (Coupling.LEG_LENGTH, 2, 10.2, 9.0, 1.0),
    "LL1S": (Coupling.LEG_LENGTH, 1, 13.5, 3.2, None),
    "TJ2SC1": (Coupling.TOE_JOINT, 2, 13.5, 3.2, 1.0),
    "TJ2SC2": (Coupling.TOE_JOINT, 2, 13.5, 3.2, 2.5),
    "TJ1S": (Coupling.TOE_JOINT, 1, 13.5, 3.2, None),
    "BF": (Coupling.NONE, "ball", 13.5, None, None),
    "CF": (Coupling.NONE, "cylinder", 13.5, None, None),
}

PRESET_NAMES = tuple(_TABLE)


def _mm(v):
    return None if v is None else v * MM


def preset_configuration(name: str, geometry: LegGeometry = LegGeometry()) -> LegConfiguration:
    try:
        coupling, feet, r_j2d, r_j3, r_j4 = _TABLE[name]
    except KeyError:
        raise ConfigurationNotFound(
            f"unknown leg configuration {name!r}; expected one of {', '.join(PRESET_NAMES)}"
        ) from None
    foot = {
        2: two_segment_foot,
        1: one_segment_foot,
        "ball": ball_foot,
        "cylinder": cylinder_foot,
    }[feet](geometry)
    return LegConfiguration(
        name=name,
        coupling=coupling,
        foot=foot,
        r_j2d=_mm(r_j2d),
        r_j3=_mm(r_j3),
        r_j4=_mm(r_j4),
        geometry=geometry,
    )


def all_presets(geometry: LegGeometry = LegGeometry()) -> list:
    return [preset_configuration(n, geometry) for n in PRESET_NAMES]


def validate(config: LegConfiguration) -> list:
    """Return a list of invariant violations (empty when the config is sound)."""
    out = []
    g = config.geometry
    for f in fields(g):
        v = getattr(g, f.name)
        if not v > 0:
            out.append(f"non-positive-length: geometry.{f.name} = {v}")
    for key in ("r_j2d", "r_j2p", "r_j3", "r_j4"):
        v = getattr(config, key)
        if v is not None and not v > 0:
            out.append(f"negative-radius: {key} = {v}")
    for key in ("k_GS", "k_BS", "k_TJ"):
        v = getattr(config, key)
        if not v > 0:
            out.append(f"non-positive-stiffness: {key} = {v}")

    foot = config.foot
    if foot.segmented:
        if foot.contact_sample_count < 2:
            out.append(f"too-few-samples: {foot.contact_sample_count} (segmented feet need >= 2)")
        if config.coupling is Coupling.NONE:
            out.append("segmented-foot-without-tendon: coupling None on a segmented foot")
        elif config.r_j3 is None:
            out.append("missing-pulley: r_j3 required on a segmented foot")
        if foot.kind is FootKind.ONE_SEGMENT and config.r_j4 is not None:
            out.append(f"pulley-on-one-segment-foot: r_j4 = {config.r_j4}")
        if foot.kind is FootKind.TWO_SEGMENT and config.r_j4 is None and config.coupling is not Coupling.NONE:
            out.append("missing-pulley: r_j4 required on a two-segment foot")
    else:
        if foot.contact_sample_count < 1:
            out.append(f"too-few-samples: {foot.contact_sample_count} (round feet need >= 1)")
        if foot.radius is None or not foot.radius > 0:
            out.append(f"non-positive-radius: foot.radius = {foot.radius}")
        label = "ball" if foot.kind is FootKind.BALL else "cylinder"
        if config.r_j3 is not None:
            out.append(f"pulley-on-{label}-foot: r_j3 = {config.r_j3}")
        if config.r_j4 is not None:
            out.append(f"pulley-on-{label}-foot: r_j4 = {config.r_j4}")
        if config.coupling is not Coupling.NONE:
            out.append(f"tendon-on-{label}-foot: coupling {config.coupling.value}")
    return out


def with_overrides(config: LegConfiguration, **overrides) -> LegConfiguration:
    return replace(config, **overrides)
