import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from birdfoot.kinematics import (
    CalibrationError,
    InvalidStateError,
    JointState,
    Pose,
    forward_kinematics,
    leg_angle,
    leg_length,
    markers_from_pose,
    pantograph_state,
    reconstruct_leg_length,
    segment_directions,
    state_from_toe,
)
from birdfoot.params import LegGeometry, preset_configuration

G = LegGeometry()

angles = st.floats(math.radians(5), math.radians(175))
hips = st.floats(-math.pi, 0.0)


def _mirror(pose):
    flip = lambda p: None if p is None else np.array([-p[0], p[1]])  # noqa: E731
    return Pose(*(flip(p) for p in (pose.j0, pose.j1, pose.j2, pose.j3, pose.j4, pose.tip)))


def test_extended_vertical_leg_is_480_mm():
    pose = forward_kinematics(G, pantograph_state(-math.pi / 2, math.pi))
    assert leg_length(pose) == pytest.approx(0.480, abs=1e-12)
    assert pose.j3 == pytest.approx([0.0, -0.480], abs=1e-12)


def test_right_angle_knee_against_complex_oracle():
    q_hip = -1.1
    state = pantograph_state(q_hip, math.pi / 2)
    pose = forward_kinematics(G, state)
    # oracle: chain of complex phasors, segment 2 turned by the exterior knee angle
    z = G.l_ls1 * cmath.exp(1j * q_hip)
    z += G.l_ls2 * cmath.exp(1j * (q_hip + math.pi / 2))
    z += G.l_ls3 * cmath.exp(1j * q_hip)
    assert pose.j3 == pytest.approx([z.real, z.imag], abs=1e-9)


def test_translation_equivariance():
    s0 = pantograph_state(-1.2, 2.4, 1.5, 3.0)
    s1 = pantograph_state(-1.2, 2.4, 1.5, 3.0, hip_pose=(0.1, 0.0))
    foot = preset_configuration("LL2SC1").foot
    p0 = forward_kinematics(G, s0, foot)
    p1 = forward_kinematics(G, s1, foot)
    for a, b in zip((p0.j0, p0.j1, p0.j2, p0.j3, p0.j4, p0.tip), (p1.j0, p1.j1, p1.j2, p1.j3, p1.j4, p1.tip)):
        assert np.array_equal(b - a, [0.1, 0.0]) or np.allclose(b - a, [0.1, 0.0], atol=1e-15)


def test_pantograph_violation_raises():
    with pytest.raises(InvalidStateError):
        forward_kinematics(G, JointState(-1.0, 2.0, 2.1))


def test_leg_length_examples():
    pose = Pose(np.array([0.0, 0.46]), None, None, np.array([0.0, 0.0]))
    assert leg_length(pose) == pytest.approx(0.46, abs=1e-15)


def test_leg_angle_vertical_and_touchdown():
    vertical = Pose(np.array([0.0, 0.46]), None, None, np.array([0.0, 0.0]))
    assert leg_angle(vertical) == pytest.approx(90.0)
    # oracle: atan2 of the toe-to-hip vector, j3 0.24 m ahead of the hip
    td = Pose(np.array([0.24, 0.4157]), None, None, np.array([0.0, 0.0]))
    assert leg_angle(td) == pytest.approx(math.degrees(math.atan2(0.4157, 0.24)), abs=1e-12)
    assert leg_angle(td) == pytest.approx(60.0, abs=0.01)
    assert leg_angle(_mirror(td)) == pytest.approx(180.0 - leg_angle(td), abs=1e-12)


@given(hips, angles)
def test_mirror_keeps_leg_length(q_hip, q_knee):
    pose = forward_kinematics(G, pantograph_state(q_hip, q_knee))
    assert leg_length(_mirror(pose)) == pytest.approx(leg_length(pose), abs=1e-15)


@given(hips, angles, angles, angles, st.sampled_from(["LL2SC1", "LL1S"]))
def test_segment_length_residuals(q_hip, q_knee, q_toe1, q_toe2, name):
    foot = preset_configuration(name).foot
    pose = forward_kinematics(G, pantograph_state(q_hip, q_knee, q_toe1, q_toe2), foot)
    d = lambda a, b: math.hypot(*(b - a))  # noqa: E731
    assert abs(d(pose.j0, pose.j1) - G.l_ls1) <= 1e-12
    assert abs(d(pose.j1, pose.j2) - G.l_ls2) <= 1e-12
    assert abs(d(pose.j2, pose.j3) - G.l_ls3) <= 1e-12
    assert abs(d(pose.j3, pose.j4) - foot.segment_lengths[0]) <= 1e-12
    if len(foot.segment_lengths) == 2:
        assert abs(d(pose.j4, pose.tip) - foot.segment_lengths[1]) <= 1e-12


@given(hips, angles, st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(-math.pi, math.pi))
def test_leg_length_invariant_under_rigid_motion(q_hip, q_knee, tx, ty, rot):
    pose = forward_kinematics(G, pantograph_state(q_hip, q_knee))
    c, s = math.cos(rot), math.sin(rot)
    R = np.array([[c, -s], [s, c]])
    moved = Pose(R @ pose.j0 + [tx, ty], None, None, R @ pose.j3 + [tx, ty])
    assert leg_length(moved) == pytest.approx(leg_length(pose), abs=1e-12)


@given(hips, angles, st.floats(-0.2, 0.2))
def test_pantograph_keeps_segments_one_and_three_parallel(q_hip, q_knee, dk):
    k = min(max(q_knee + dk, math.radians(5)), math.radians(175))
    a1, _, a3, _, _ = segment_directions(pantograph_state(q_hip, k))
    assert abs(math.remainder(a1 - a3, 2 * math.pi)) <= 1e-10


@given(st.floats(0.30, 0.47), st.floats(math.radians(40), math.radians(140)))
def test_state_from_toe_places_j3(length, angle):
    hip = (0.0, 0.41)
    j3 = (hip[0] - length * math.cos(angle), hip[1] - length * math.sin(angle))
    pose = forward_kinematics(G, state_from_toe(G, hip, j3))
    assert pose.j3 == pytest.approx(j3, abs=1e-12)


# -- marker reconstruction ----------------------------------------------------

def test_markers_of_extended_pose():
    pose = forward_kinematics(G, pantograph_state(-math.pi / 2, math.pi))
    assert reconstruct_leg_length(G, markers_from_pose(pose)) == pytest.approx(0.480, abs=1e-12)


@given(hips, angles)
def test_marker_round_trip(q_hip, q_knee):
    pose = forward_kinematics(G, pantograph_state(q_hip, q_knee))
    assert abs(reconstruct_leg_length(G, markers_from_pose(pose)) - leg_length(pose)) <= 1e-9


@settings(max_examples=200)
@given(
    st.floats(-2.0, -1.0),
    st.floats(math.radians(100), math.radians(175)),
    st.lists(st.floats(-1e-3, 1e-3), min_size=8, max_size=8),
)
def test_marker_noise_of_1_mm_gives_at_most_5_mm(q_hip, q_knee, noise):
    pose = forward_kinematics(G, pantograph_state(q_hip, q_knee))
    m = markers_from_pose(pose) + np.reshape(noise, (4, 2))
    assert abs(reconstruct_leg_length(G, m) - leg_length(pose)) <= 5e-3


def test_inconsistent_markers_raise():
    pose = forward_kinematics(G, pantograph_state(-1.3, 2.5))
    m = markers_from_pose(pose)
    m[1] += [0.02, 0.0]  # knee marker 20 mm off: > 5 % of 160 mm
    with pytest.raises(CalibrationError):
        reconstruct_leg_length(G, m)
