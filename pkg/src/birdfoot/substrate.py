"""Ground models: rigid wood and stone, granular pebbles and sand.

Granular media follow a pressure-sinkage law ``p = k z**n`` with a
Mohr-Coulomb tangential capacity ``mu N + c A``.  Rigid substrates resolve
penetration with a stiff penalty instead of a law.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

RIGID_PENALTY = 1e6  # N/m per contact point


class SubstrateKind(str, enum.Enum):
    WOOD = "wood"
    STONE = "stone"
    PEBBLES = "pebbles"
    SAND = "sand"
    CUSTOM = "custom"


class RangeError(ValueError):
    pass


@dataclass(frozen=True)
class Heightfield:
    x: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        if self.x.ndim != 1 or self.x.shape != self.h.shape or np.any(np.diff(self.x) <= 0):
            raise ValueError("heightfield needs matching 1-D arrays with increasing x")

    def __eq__(self, other):
        return (
            isinstance(other, Heightfield)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.h, other.h)
        )

    __hash__ = None

    @property
    def amplitude(self) -> float:
        return float(self.h.max() - self.h.min())


@dataclass(frozen=True, eq=False)
class Substrate:
    kind: SubstrateKind
    mu: float
    sinkage_k: Optional[float] = None  # None: rigid
    sinkage_n: float = 1.0
    cohesion: float = 0.0
    dig_rate: float = 0.0
    heightfield: Optional[Heightfield] = None
    penalty: float = RIGID_PENALTY

    @property
    def rigid(self) -> bool:
        return self.sinkage_k is None

    def __eq__(self, other):
        if not isinstance(other, Substrate):
            return NotImplemented
        same = all(
            getattr(self, f) == getattr(other, f)
            for f in ("kind", "mu", "sinkage_k", "sinkage_n", "cohesion", "dig_rate", "penalty")
        )
        if not same:
            return False
        if self.heightfield is None or other.heightfield is None:
            return self.heightfield is other.heightfield
        return self.heightfield == other.heightfield

    __hash__ = None


def _check_range(field: Heightfield, x):
    lo, hi = field.x[0], field.x[-1]
    if np.any(np.asarray(x) < lo) or np.any(np.asarray(x) > hi):
        raise RangeError(f"x outside heightfield [{lo}, {hi}]")


def surface_height(substrate: Substrate, x):
    """Surface height at ``x``; nominal surface (0) without a heightfield."""
    field = substrate.heightfield
    if field is None:
        return np.zeros_like(x, dtype=float) if np.ndim(x) else 0.0
    _check_range(field, x)
    out = np.interp(x, field.x, field.h)
    return out if np.ndim(x) else float(out)


def surface_slope(substrate: Substrate, x):
    field = substrate.heightfield
    if field is None:
        return np.zeros_like(x, dtype=float) if np.ndim(x) else 0.0
    _check_range(field, x)
    slopes = np.diff(field.h) / np.diff(field.x)
    i = np.clip(np.searchsorted(field.x, x, side="right") - 1, 0, len(slopes) - 1)
    out = slopes[i]
    return out if np.ndim(x) else float(out)


def normal_reaction(substrate: Substrate, depth: float, area: float) -> float:
    if depth < 0:
        raise ValueError(f"negative depth {depth!r}")
    if substrate.rigid:
        raise ValueError("rigid substrates resolve penetration by constraint, not a law")
    return substrate.sinkage_k * depth**substrate.sinkage_n * area


def tangential_capacity(substrate: Substrate, normal_force: float, area: float) -> float:
    if normal_force < 0:
        raise ValueError(f"negative normal force {normal_force!r}")
    return substrate.mu * normal_force + substrate.cohesion * area


def calibrate_sinkage(target_depth: float, load: float, area: float, sinkage_n: float = 1.0) -> float:
    """Sinkage stiffness that makes ``load`` sink a flat ``area`` by ``target_depth``."""
    for name, v in (("target_depth", target_depth), ("load", load), ("area", area)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    return load / (target_depth**sinkage_n * area)


def stone_bumps(seed: int, length: float = 0.4, stone_size_range=(0.030, 0.060)):
    """``(start, width, height)`` of each stone, laid side by side along ``length``.

    Widths and heights are drawn uniformly from ``stone_size_range``.
    """
    lo, hi = stone_size_range
    if not 0.030 <= lo <= hi <= 0.060:
        raise ValueError("stone sizes must lie within [30, 60] mm")
    rng = np.random.default_rng(seed)
    bumps = []
    start = 0.0
    while start < length:
        w, height = rng.uniform(lo, hi, size=2)
        bumps.append((start, float(w), float(height)))
        start += w
    return bumps


def generate_stone_field(seed: int, length: float = 0.4, stone_size_range=(0.030, 0.060), dx: float = 1e-3) -> Heightfield:
    """Glued-stone terrain: consecutive raised-cosine bumps on a flat board.

    The board level (0) is touched between neighbouring stones.
    """
    bumps = stone_bumps(seed, length, stone_size_range)
    n = int(round(length / dx))
    x = np.arange(n + 1) * dx
    h = np.zeros_like(x)
    for start, w, height in bumps:
        inside = (x >= start) & (x <= start + w)
        t = (x[inside] - start) / w
        h[inside] = np.maximum(h[inside], 0.5 * height * (1.0 - np.cos(2.0 * math.pi * t)))
    return Heightfield(x, h)


REFERENCE_LOAD = 40.0  # N


def substrate_preset(name: str, seed: int = 0, **overrides) -> Substrate:
    """Default substrates.  Friction and sinkage constants are calibration choices."""
    kind = SubstrateKind(name.lower())
    if kind is SubstrateKind.WOOD:
        sub = Substrate(kind, mu=0.60)
    elif kind is SubstrateKind.STONE:
        sub = Substrate(kind, mu=0.75, heightfield=generate_stone_field(seed))
    elif kind is SubstrateKind.PEBBLES:
        k = calibrate_sinkage(0.020, REFERENCE_LOAD, 12e-4, 1.0)
        sub = Substrate(kind, mu=0.45, sinkage_k=k, sinkage_n=1.0, dig_rate=1.0)
    elif kind is SubstrateKind.SAND:
        k = calibrate_sinkage(0.015, REFERENCE_LOAD, 12e-4, 1.25)
        sub = Substrate(kind, mu=0.55, sinkage_k=k, sinkage_n=1.25, dig_rate=0.8)
    else:
        raise ValueError("custom substrates are built directly with Substrate(...)")
    return replace(sub, **overrides) if overrides else sub


SUBSTRATE_NAMES = ("wood", "stone", "pebbles", "sand")


def save_heightfield(path, field: Heightfield) -> None:
    np.savetxt(path, np.column_stack([field.x, field.h]), fmt="%.17g", header="x_m height_m")


def load_heightfield(path) -> Heightfield:
    data = np.loadtxt(path, ndmin=2)
    return Heightfield(np.ascontiguousarray(data[:, 0]), np.ascontiguousarray(data[:, 1]))
