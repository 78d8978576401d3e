"""Quasi-static simulation of tendon-coupled, multi-segment robot feet.

The modules build on each other in this order: :mod:`params` (shared types
and presets), :mod:`kinematics`, :mod:`tendon`, :mod:`substrate`,
:mod:`solver`, :mod:`harness` (trials and analysis), then :mod:`config`,
:mod:`io` and :mod:`cli`.
"""

from .harness import (
    Events,
    Trace,
    TrialAborted,
    TrialResult,
    average_force,
    cop_sweep,
    correct_vertical_grf,
    detect_events,
    peak_horizontal_force,
    relative_force,
    relative_forces,
    run_trial,
    sweep,
)
from .kinematics import (
    JointState,
    forward_kinematics,
    leg_length,
    reconstruct_leg_length,
)
from .params import (
    PRESET_NAMES,
    Coupling,
    FootGeometry,
    FootKind,
    LegConfiguration,
    LegGeometry,
    ProtocolParams,
    preset_configuration,
    validate,
)
from .solver import EquilibriumState, potential_energy, solve_equilibrium
from .substrate import Substrate, substrate_preset
from .tendon import joint_torques

__version__ = "0.1.0"

__all__ = [
    "Coupling",
    "EquilibriumState",
    "Events",
    "FootGeometry",
    "FootKind",
    "JointState",
    "LegConfiguration",
    "LegGeometry",
    "PRESET_NAMES",
    "ProtocolParams",
    "Substrate",
    "Trace",
    "TrialAborted",
    "TrialResult",
    "average_force",
    "cop_sweep",
    "correct_vertical_grf",
    "detect_events",
    "forward_kinematics",
    "joint_torques",
    "leg_length",
    "peak_horizontal_force",
    "potential_energy",
    "preset_configuration",
    "reconstruct_leg_length",
    "relative_force",
    "relative_forces",
    "run_trial",
    "solve_equilibrium",
    "substrate_preset",
    "sweep",
    "validate",
]
