"""Tendon routing for leg-length (LL) and toe-joint (TJ) couplings.

Tendons are ideal: inextensible, frictionless, wrapping each joint pulley so
that a joint rotation ``dtheta`` changes the route length by ``r * dtheta``.
All excursions are measured from a rest state (the touch-down pose), where
every tendon is exactly taut.

The leg-length tendon runs from segment 1 over the knee pulley ``r_j1``,
the ankle pulleys and the toe pulleys, so it both supports the leg and
torques the toes.  The toe-joint tendon starts on segment 3 and only wraps
the toe pulleys.

Sign of the per-joint rotations: positive means the rotation lengthens the
route.  For the knee and ankle that is flexion (interior angle decreasing, the leg
shortens); for toe joint 1 it is a decreasing ``q_toe1`` (the leg vaulting
over the toe); for toe joint 2 an increasing ``q_toe2`` (tip lifted).
"""

from __future__ import annotations

from dataclasses import dataclass

from .kinematics import JointState
from .params import Coupling, LegConfiguration


LL_WRAPS_KNEE = True


class CouplingError(TypeError):
    pass


@dataclass(frozen=True)
class TendonState:
    excursion: float
    F_tendon: float
    torques: dict


def lengthening_rotations(rest: JointState, state: JointState):
    """(ankle, toe1, toe2) rotations from ``rest``, positive when the route lengthens."""
    return (
        rest.q_ankle - state.q_ankle,
        rest.q_toe1 - state.q_toe1,
        state.q_toe2 - rest.q_toe2,
    )


def _toe_excursion(config, d1, d2):
    e = 0.0
    if config.r_j3 is not None:
        e += config.r_j3 * d1
    if config.r_j4 is not None:
        e += config.r_j4 * d2
    return e


def excursion_ll(config: LegConfiguration, state: JointState, rest: JointState) -> float:
    if config.coupling is not Coupling.LEG_LENGTH:
        raise CouplingError(f"{config.name} is not leg-length coupled")
    da, d1, d2 = lengthening_rotations(rest, state)
    e = config.r_j2d * da + _toe_excursion(config, d1, d2)
    if LL_WRAPS_KNEE:
        e += config.geometry.r_j1 * (rest.q_knee - state.q_knee)
    return e


def excursion_tj(config: LegConfiguration, state: JointState, rest: JointState) -> float:
    if config.coupling is not Coupling.TOE_JOINT:
        raise CouplingError(f"{config.name} is not toe-joint coupled")
    _, d1, d2 = lengthening_rotations(rest, state)
    return _toe_excursion(config, d1, d2)


def tendon_force(excursion: float, stiffness: float) -> float:
    if not stiffness > 0:
        raise ValueError(f"stiffness must be positive, got {stiffness!r}")
    return max(0.0, stiffness * excursion)


def spring_ratio(config: LegConfiguration) -> float:
    """Transmission ratio between the global spring and the distal tendon."""
    return config.r_j2p / config.r_j2d


def tendon_stiffness(config: LegConfiguration) -> float:
    """Effective stiffness seen by the distal toe tendon."""
    if config.coupling is Coupling.LEG_LENGTH:
        return config.k_GS * spring_ratio(config) ** 2
    if config.coupling is Coupling.TOE_JOINT:
        return config.k_TJ
    raise CouplingError(f"{config.name} has no toe tendon")


def joint_torques(F_tendon: float, config: LegConfiguration) -> dict:
    """Pulley torques ``F * r`` for joints on the tendon route, zero elsewhere."""
    if F_tendon < 0:
        raise ValueError("a tendon cannot push")
    wraps_ankle = config.coupling is Coupling.LEG_LENGTH
    on_route = config.coupling is not Coupling.NONE
    return {
        "j1": F_tendon * config.geometry.r_j1 if wraps_ankle and LL_WRAPS_KNEE else 0.0,
        "j2": F_tendon * config.r_j2d if wraps_ankle else 0.0,
        "j3": F_tendon * config.r_j3 if on_route and config.r_j3 is not None else 0.0,
        "j4": F_tendon * config.r_j4 if on_route and config.r_j4 is not None else 0.0,
    }


def excursion(config: LegConfiguration, state: JointState, rest: JointState) -> float:
    if config.coupling is Coupling.LEG_LENGTH:
        return excursion_ll(config, state, rest)
    if config.coupling is Coupling.TOE_JOINT:
        return excursion_tj(config, state, rest)
    return 0.0


def knee_spring_excursion(config: LegConfiguration, state: JointState, rest: JointState) -> float:
    """Biarticular (knee) spring stretch; routed over the knee pulley r_j1."""
    return config.geometry.r_j1 * (rest.q_knee - state.q_knee)


def tendon_state(config: LegConfiguration, state: JointState, rest: JointState) -> TendonState:
    if config.coupling is Coupling.NONE:
        return TendonState(0.0, 0.0, joint_torques(0.0, config))
    e = excursion(config, state, rest)
    F = tendon_force(e, tendon_stiffness(config))
    return TendonState(e, F, joint_torques(F, config))


def spring_energy_terms(config: LegConfiguration, state: JointState, rest: JointState) -> dict:
    """Stored energy per spring [J]; slack tendons store nothing."""
    terms = {"global": 0.0, "toe": 0.0}
    if config.coupling is not Coupling.NONE:
        e = excursion(config, state, rest)
        key = "global" if config.coupling is Coupling.LEG_LENGTH else "toe"
        if e > 0:
            terms[key] = 0.5 * tendon_stiffness(config) * e * e
    ek = knee_spring_excursion(config, state, rest)
    terms["knee"] = 0.5 * config.k_BS * ek * ek if ek > 0 else 0.0
    return terms


def spring_energy(config: LegConfiguration, state: JointState, rest: JointState) -> float:
    return sum(spring_energy_terms(config, state, rest).values())
