"""Planar kinematics of the pantograph leg and its toes.

Conventions (used by every module):

* world x points rightward, y up; the hip travels towards -x and the toes
  point towards -x (ahead of the toe joint j3);
* ``q_hip`` is the absolute direction of segment 1 (hip -> knee), ccw from +x;
* ``q_knee`` and ``q_ankle`` are interior angles (pi = straight).  Segments 1
  and 3 stay parallel, which is the case exactly when ``q_ankle == q_knee``;
* ``q_toe1`` is the interior angle at j3 between segment 3 (towards the
  ankle) and toe segment 1, measured ccw;
* ``q_toe2`` is the plantar interior angle at j4; values below pi curl the
  tip down, values above pi lift it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .params import FootGeometry, FootKind, LegGeometry

PANTOGRAPH_TOL = 1e-9


class InvalidStateError(ValueError):
    pass


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class JointState:
    q_hip: float
    q_knee: float
    q_ankle: float
    q_toe1: float = math.pi / 2
    q_toe2: float = math.pi
    hip_pose: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class Pose:
    j0: np.ndarray
    j1: np.ndarray
    j2: np.ndarray
    j3: np.ndarray
    j4: Optional[np.ndarray] = None
    tip: Optional[np.ndarray] = None


def unit(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)])


def pantograph_state(q_hip, q_knee, q_toe1=math.pi / 2, q_toe2=math.pi, hip_pose=(0.0, 0.0)) -> JointState:
    """JointState with the ankle slaved to the knee."""
    return JointState(q_hip, q_knee, q_knee, q_toe1, q_toe2, tuple(hip_pose))


def segment_directions(state: JointState):
    """Absolute directions of segments 1, 2, 3 and of toe segments 1, 2."""
    a1 = state.q_hip
    a2 = a1 + (math.pi - state.q_knee)
    a3 = a2 - (math.pi - state.q_ankle)
    psi1 = a3 + math.pi + state.q_toe1
    psi2 = psi1 + (math.pi - state.q_toe2)
    return a1, a2, a3, psi1, psi2


def forward_kinematics(
    geometry: LegGeometry,
    state: JointState,
    foot: Optional[FootGeometry] = None,
    pantograph_tol: Optional[float] = PANTOGRAPH_TOL,
) -> Pose:
    """Joint positions for ``state``.

    Toe joints are only placed when a segmented ``foot`` is given.  Pass
    ``pantograph_tol=None`` to skip the parallel-segment check (noisy marker
    data).
    """
    if pantograph_tol is not None and abs(state.q_knee - state.q_ankle) > pantograph_tol:
        raise InvalidStateError(
            f"pantograph violated: q_knee={state.q_knee!r} q_ankle={state.q_ankle!r}"
        )
    a1, a2, a3, psi1, psi2 = segment_directions(state)
    j0 = np.asarray(state.hip_pose, dtype=float)
    j1 = j0 + geometry.l_ls1 * unit(a1)
    j2 = j1 + geometry.l_ls2 * unit(a2)
    j3 = j2 + geometry.l_ls3 * unit(a3)
    j4 = tip = None
    if foot is not None and foot.segmented:
        if foot.kind is FootKind.TWO_SEGMENT:
            j4 = j3 + foot.segment_lengths[0] * unit(psi1)
            tip = j4 + foot.segment_lengths[1] * unit(psi2)
        else:
            j4 = tip = j3 + foot.segment_lengths[0] * unit(psi1)
    return Pose(j0, j1, j2, j3, j4, tip)


def leg_length(pose: Pose) -> float:
    return float(math.hypot(*(pose.j0 - pose.j3)))


def leg_angle(pose: Pose) -> float:
    """Angle of the toe->hip vector above the ground plane [deg]."""
    dx, dy = pose.j0 - pose.j3
    return math.degrees(math.atan2(dy, dx))


# -- inverse kinematics --------------------------------------------------

def pantograph_ik(geometry: LegGeometry, length: float):
    """Knee turn ``gamma`` and direction offset ``delta`` for a hip-toe distance.

    The hip-to-j3 vector equals ``(l1+l3) u(a1) + l2 u(a1+gamma)``, whose
    direction is ``a1 + delta``.  ``gamma`` lies in [0, pi].
    """
    a = geometry.l_ls1 + geometry.l_ls3
    b = geometry.l_ls2
    c = (length * length - a * a - b * b) / (2.0 * a * b)
    if not -1.0 <= c <= 1.0:
        raise InvalidStateError(f"hip-toe distance {length!r} unreachable")
    gamma = math.acos(c)
    delta = math.atan2(b * math.sin(gamma), a + b * math.cos(gamma))
    return gamma, delta


def state_from_toe(geometry: LegGeometry, hip, j3, psi1=math.pi, psi2=None) -> JointState:
    """Pantograph state placing toe joint 1 at ``j3`` with absolute toe directions."""
    v = np.asarray(j3, float) - np.asarray(hip, float)
    gamma, delta = pantograph_ik(geometry, math.hypot(*v))
    a1 = math.atan2(v[1], v[0]) - delta
    q_knee = math.pi - gamma
    q_toe1 = psi1 - (a1 + math.pi)
    if psi2 is None:
        psi2 = psi1
    q_toe2 = math.pi - (psi2 - psi1)
    return JointState(a1, q_knee, q_knee, q_toe1, q_toe2, (float(hip[0]), float(hip[1])))


# -- marker reconstruction -----------------------------------------------

def markers_from_pose(pose: Pose, s3_fraction: float = 0.8) -> np.ndarray:
    """Marker array ``[j0, j1, j2, s3]`` with s3 on segment 3 near its bottom."""
    s3 = pose.j2 + s3_fraction * (pose.j3 - pose.j2)
    return np.array([pose.j0, pose.j1, pose.j2, s3], dtype=float)


def _wrap(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def joint_angles_from_markers(geometry: LegGeometry, markers, tolerance: float = 0.05) -> JointState:
    m = np.asarray(markers, dtype=float).reshape(4, 2)
    j0, j1, j2, s3 = m
    d01 = j1 - j0
    d12 = j2 - j1
    d23 = s3 - j2
    for got, want, label in (
        (math.hypot(*d01), geometry.l_ls1, "j0-j1"),
        (math.hypot(*d12), geometry.l_ls2, "j1-j2"),
    ):
        if abs(got - want) > tolerance * want:
            raise CalibrationError(f"{label} distance {got:.4f} m vs segment {want:.4f} m")
    if not 0.0 < math.hypot(*d23) <= (1.0 + tolerance) * geometry.l_ls3:
        raise CalibrationError(f"segment-3 marker at {math.hypot(*d23):.4f} m from j2")
    a1 = math.atan2(d01[1], d01[0])
    a2 = math.atan2(d12[1], d12[0])
    a3 = math.atan2(d23[1], d23[0])
    q_knee = math.pi - _wrap(a2 - a1)
    q_ankle = math.pi + _wrap(a3 - a2)
    return JointState(a1, q_knee, q_ankle, hip_pose=(float(j0[0]), float(j0[1])))


def reconstruct_leg_length(geometry: LegGeometry, markers, tolerance: float = 0.05) -> float:
    """Leg length from four planar markers via joint angles and forward kinematics."""
    state = joint_angles_from_markers(geometry, markers, tolerance)
    return leg_length(forward_kinematics(geometry, state, pantograph_tol=None))


def reconstruct_toe_joint(geometry: LegGeometry, markers, tolerance: float = 0.05) -> np.ndarray:
    state = joint_angles_from_markers(geometry, markers, tolerance)
    return forward_kinematics(geometry, state, pantograph_tol=None).j3
