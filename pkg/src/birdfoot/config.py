"""YAML run files and leg-configuration (de)serialization.

A run file is a mapping with four optional sections.  Lengths are in mm and
stiffnesses in N/mm, as in the parameter tables; everything else is SI::

    leg: LL2SC3            # preset name, or a mapping (see below)
    substrate: pebbles     # wood | stone | pebbles | sand, or a mapping
    protocol:
      hip_torque: 2.0      # N*m
      hip_height: 410      # mm, rail above the nominal surface
      td_angle: 60         # deg
      station_step: 1      # mm
      hanging_mass: 4.3    # kg
    seed: 0

A leg mapping names its base preset and overrides any field::

    leg:
      preset: LL2SC1
      name: LL2SC1-stiff   # optional new identifier
      r_j3: 4.0            # mm
      k_GS: 3.0            # N/mm
      foot: {contact_sample_count: 9}
      geometry: {l_ts1: 40}

A substrate mapping is ``{name: sand, mu: 0.5, sinkage_n: 1.2, ...}`` with
the remaining keys being :class:`~birdfoot.substrate.Substrate` fields in SI.

Precedence: command-line flags override the run file, which overrides the
presets.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import yaml

from .params import (
    MM,
    N_PER_MM,
    PRESET_NAMES,
    Coupling,
    FootKind,
    LegConfiguration,
    LegGeometry,
    ProtocolParams,
    preset_configuration,
)
from .substrate import Substrate, substrate_preset


class ConfigError(ValueError):
    pass


_LENGTHS = ("r_j2d", "r_j2p", "r_j3", "r_j4")
_STIFFNESS = ("k_GS", "k_BS", "k_TJ")
_PROTOCOL_MM = ("hip_height", "station_step")
_SUBSTRATE_KEYS = ("mu", "sinkage_k", "sinkage_n", "cohesion", "dig_rate", "penalty")


def _scaled(v: float, unit: float) -> float:
    """Shortest decimal for ``v / unit`` that converts back to ``v`` exactly."""
    approx = v / unit
    for digits in range(1, 18):
        d = float(f"{approx:.{digits}g}")
        if d * unit == v:
            return d
    return approx


def _unscale(v, unit):
    return None if v is None else float(v) * unit


# -- leg configurations -------------------------------------------------------

def _base_preset(config: LegConfiguration) -> str:
    if config.name in PRESET_NAMES:
        return config.name
    # every field is written out, so any preset with the same foot will do
    for name in PRESET_NAMES:
        base = preset_configuration(name)
        if base.foot.kind is config.foot.kind and base.coupling is config.coupling:
            return name
    for name in PRESET_NAMES:
        if preset_configuration(name).foot.kind is config.foot.kind:
            return name
    return PRESET_NAMES[0]


def config_to_dict(config: LegConfiguration) -> dict:
    """Plain mapping of ``config`` in table units (mm, N/mm)."""
    mm = lambda v: None if v is None else _scaled(v, MM)  # noqa: E731
    foot = config.foot
    return {
        "preset": _base_preset(config),
        "name": config.name,
        "coupling": config.coupling.value,
        "foot": {
            "kind": foot.kind.value,
            "segment_lengths": [mm(v) for v in foot.segment_lengths],
            "radius": mm(foot.radius),
            "width": mm(foot.width),
            "contact_sample_count": foot.contact_sample_count,
        },
        **{k: mm(getattr(config, k)) for k in _LENGTHS},
        **{k: _scaled(getattr(config, k), N_PER_MM) for k in _STIFFNESS},
        "geometry": {f.name: mm(getattr(config.geometry, f.name)) for f in fields(LegGeometry)},
    }


def config_from_dict(data) -> LegConfiguration:
    """Inverse of :func:`config_to_dict`; missing keys fall back to the preset."""
    if isinstance(data, str):
        return preset_configuration(data)
    if not isinstance(data, dict):
        raise ConfigError(f"leg must be a preset name or a mapping, got {type(data).__name__}")
    data = dict(data)
    base_name = data.pop("preset", None) or data.get("name")
    if base_name is None:
        raise ConfigError("leg mapping needs a 'preset' key")
    geo_over = data.pop("geometry", {}) or {}
    unknown = set(geo_over) - {f.name for f in fields(LegGeometry)}
    if unknown:
        raise ConfigError(f"unknown geometry key(s): {', '.join(sorted(unknown))}")
    geometry = replace(LegGeometry(), **{k: _unscale(v, MM) for k, v in geo_over.items()})
    config = preset_configuration(base_name, geometry)

    changes = {}
    foot_over = data.pop("foot", None)
    if foot_over:
        foot_changes = {}
        for k, v in foot_over.items():
            if k == "kind":
                foot_changes[k] = FootKind(v)
            elif k == "segment_lengths":
                foot_changes[k] = tuple(_unscale(x, MM) for x in v)
            elif k in ("radius", "width"):
                foot_changes[k] = _unscale(v, MM)
            elif k == "contact_sample_count":
                foot_changes[k] = int(v)
            else:
                raise ConfigError(f"unknown foot key: {k}")
        changes["foot"] = replace(config.foot, **foot_changes)
    for k, v in data.items():
        if k == "name":
            changes[k] = str(v)
        elif k == "coupling":
            changes[k] = Coupling(v)
        elif k in _LENGTHS:
            changes[k] = _unscale(v, MM)
        elif k in _STIFFNESS:
            changes[k] = _unscale(v, N_PER_MM)
        else:
            raise ConfigError(f"unknown leg key: {k}")
    return replace(config, **changes)


def serialize(config: LegConfiguration) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)


def parse(text: str) -> LegConfiguration:
    return config_from_dict(yaml.safe_load(text))


# -- run files ---------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    leg: Optional[LegConfiguration] = None
    substrate: str = "wood"
    substrate_overrides: dict = field(default_factory=dict)
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    seed: int = 0

    def build_substrate(self, seed: Optional[int] = None) -> Substrate:
        return substrate_preset(self.substrate, self.seed if seed is None else seed, **self.substrate_overrides)


def protocol_from_dict(data: dict, base: ProtocolParams = ProtocolParams()) -> ProtocolParams:
    known = {f.name for f in fields(ProtocolParams)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown protocol key(s): {', '.join(sorted(unknown))}")
    return replace(
        base,
        **{k: _unscale(v, MM) if k in _PROTOCOL_MM else float(v) for k, v in data.items()},
    )


def protocol_to_dict(protocol: ProtocolParams) -> dict:
    return {
        f.name: _scaled(getattr(protocol, f.name), MM) if f.name in _PROTOCOL_MM else getattr(protocol, f.name)
        for f in fields(ProtocolParams)
    }


def _substrate_from(data):
    if isinstance(data, str):
        return data, {}
    if not isinstance(data, dict) or "name" not in data:
        raise ConfigError("substrate must be a name or a mapping with a 'name' key")
    data = dict(data)
    name = data.pop("name")
    unknown = set(data) - set(_SUBSTRATE_KEYS)
    if unknown:
        raise ConfigError(f"unknown substrate key(s): {', '.join(sorted(unknown))}")
    return name, {k: None if v is None else float(v) for k, v in data.items()}


def run_config_from_dict(data: dict) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("run file must be a mapping")
    unknown = set(data) - {"leg", "substrate", "protocol", "seed"}
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    leg = config_from_dict(data["leg"]) if "leg" in data else None
    substrate, sub_over = _substrate_from(data.get("substrate", "wood"))
    protocol = protocol_from_dict(data.get("protocol") or {})
    return RunConfig(leg, substrate, sub_over, protocol, int(data.get("seed", 0)))


def load_run_config(path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return run_config_from_dict(data)


def run_config_to_dict(run: RunConfig) -> dict:
    out = {}
    if run.leg is not None:
        out["leg"] = config_to_dict(run.leg)
    out["substrate"] = {"name": run.substrate, **run.substrate_overrides} if run.substrate_overrides else run.substrate
    out["protocol"] = protocol_to_dict(run.protocol)
    out["seed"] = run.seed
    return out


def merge_flags(run: RunConfig, leg=None, substrate=None, torque=None, seed=None) -> RunConfig:
    """Apply command-line flags on top of a run file (flags win)."""
    changes = {}
    if leg is not None:
        changes["leg"] = preset_configuration(leg)
    if substrate is not None:
        changes["substrate"] = substrate
    if torque is not None:
        changes["protocol"] = replace(run.protocol, hip_torque=float(torque))
    if seed is not None:
        changes["seed"] = int(seed)
    return replace(run, **changes) if changes else run
