import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from birdfoot.kinematics import state_from_toe
from birdfoot.params import MM, PRESET_NAMES, LegGeometry, preset_configuration
from birdfoot.tendon import (
    CouplingError,
    excursion_ll,
    excursion_tj,
    joint_torques,
    spring_energy,
    spring_energy_terms,
    tendon_force,
    tendon_state,
    tendon_stiffness,
)

G = LegGeometry()
REST = state_from_toe(G, (0.2367, 0.41), (0.0, 0.0))


def moved(**deltas):
    return replace(REST, **{k: getattr(REST, k) + v for k, v in deltas.items()})


def test_rest_pose_has_zero_excursion():
    assert excursion_ll(preset_configuration("LL2SC1"), REST, REST) == 0.0
    assert excursion_tj(preset_configuration("TJ2SC1"), REST, REST) == 0.0


def test_toe_flexion_excursion():
    c = preset_configuration("LL2SC1")
    assert excursion_ll(c, moved(q_toe1=-0.1), REST) == pytest.approx(0.32 * MM, rel=1e-12)


def test_ankle_rotation_excursion():
    c = preset_configuration("LL2SC1")
    assert excursion_ll(c, moved(q_ankle=-0.2), REST) == pytest.approx(2.7 * MM, rel=1e-12)


def test_tj_ignores_leg_compression():
    c = preset_configuration("TJ1S")
    assert excursion_tj(c, moved(q_knee=-0.3, q_ankle=-0.3), REST) == 0.0


def test_tj_toe_excursions():
    c = preset_configuration("TJ2SC2")
    assert excursion_tj(c, moved(q_toe1=-0.3), REST) == pytest.approx(0.96 * MM, rel=1e-12)
    # oracle: sum of per-joint r * dtheta
    assert excursion_tj(c, moved(q_toe1=-0.1, q_toe2=0.2), REST) == pytest.approx(
        (3.2 * 0.1 + 2.5 * 0.2) * MM, rel=1e-12
    )
    assert excursion_tj(c, moved(q_toe1=-0.1, q_toe2=0.2), REST) == pytest.approx(0.82 * MM, rel=1e-12)


def test_wrong_coupling_is_misuse():
    with pytest.raises(CouplingError):
        excursion_ll(preset_configuration("TJ1S"), REST, REST)
    with pytest.raises(CouplingError):
        excursion_tj(preset_configuration("LL1S"), REST, REST)


def test_tendon_force_examples():
    assert tendon_force(-1 * MM, 2.2e3) == 0.0
    assert tendon_force(5 * MM, 2.2e3) == pytest.approx(11.0)
    assert tendon_force(5 * MM, 4.0e3) == pytest.approx(20.0)
    with pytest.raises(ValueError):
        tendon_force(1e-3, 0.0)


def test_joint_torque_examples():
    t = joint_torques(100.0, preset_configuration("LL2SC1"))
    assert t["j3"] == pytest.approx(0.32, rel=1e-12)
    assert t["j4"] == pytest.approx(0.10, rel=1e-12)
    assert joint_torques(100.0, preset_configuration("LL2SC3"))["j3"] == pytest.approx(0.90, rel=1e-12)
    for name in PRESET_NAMES:
        assert all(v == 0.0 for v in joint_torques(0.0, preset_configuration(name)).values())


def test_joints_off_the_route_get_nothing():
    tj = joint_torques(50.0, preset_configuration("TJ1S"))
    assert tj["j1"] == tj["j2"] == tj["j4"] == 0.0
    bf = joint_torques(50.0, preset_configuration("BF"))
    assert all(v == 0.0 for v in bf.values())


def test_tendon_cannot_push():
    with pytest.raises(ValueError):
        joint_torques(-1.0, preset_configuration("LL1S"))


def test_spring_energy_examples():
    c = preset_configuration("LL1S")
    assert spring_energy(c, REST, REST) == 0.0
    # 10 mm of tendon from toe flexion alone: 1/2 * 2.2 N/mm * (10 mm)^2
    s = moved(q_toe1=-0.010 / c.r_j3)
    assert spring_energy_terms(c, s, REST)["global"] == pytest.approx(0.11, rel=1e-12)
    # knee flexed, toes turned far enough that the tendon is slack
    slack = moved(q_knee=-0.1, q_ankle=-0.1, q_toe1=2.0)
    terms = spring_energy_terms(c, slack, REST)
    assert terms["global"] == 0.0
    assert spring_energy(c, slack, REST) == pytest.approx(terms["knee"]) and terms["knee"] > 0


@given(st.just(0.0) | st.floats(1e-9, 500.0), st.floats(0.5e-3, 10e-3))
def test_doubling_toe_pulley_doubles_torque(F, r):
    c = replace(preset_configuration("LL2SC1"), r_j3=r)
    c2 = replace(c, r_j3=2 * r)
    assert joint_torques(F, c2)["j3"] == pytest.approx(2 * joint_torques(F, c)["j3"], rel=1e-15, abs=0)


@given(
    st.sampled_from(["TJ2SC1", "TJ2SC2", "TJ1S"]),
    st.floats(-0.4, 0.0),
    st.floats(-0.5, 0.5),
    st.floats(-0.5, 0.5),
)
def test_tj_decoupling_from_leg_length(name, dk, d1, d2):
    c = preset_configuration(name)
    base = moved(q_toe1=d1, q_toe2=d2)
    compressed = replace(base, q_knee=base.q_knee + dk, q_ankle=base.q_ankle + dk, q_hip=base.q_hip + 0.1)
    assert excursion_tj(c, compressed, REST) == excursion_tj(c, base, REST)
    assert tendon_state(c, compressed, REST).torques == tendon_state(c, base, REST).torques


_JOINTS = {"j1": "q_knee", "j2": "q_ankle", "j3": "q_toe1", "j4": "q_toe2"}
_SIGN = {"j1": -1.0, "j2": -1.0, "j3": -1.0, "j4": 1.0}  # lengthening direction of each angle


@settings(max_examples=100)
@given(
    st.sampled_from([n for n in PRESET_NAMES if n not in ("BF", "CF")]),
    st.floats(-0.4, 0.0),
    st.floats(-0.6, 0.2),
    st.floats(-0.4, 0.6),
)
def test_energy_gradient_is_tendon_torque(name, dk, d1, d2):
    """Central differences of the tendon energy reproduce F * r per joint."""
    c = preset_configuration(name)
    s = moved(q_knee=dk, q_ankle=dk, q_toe1=d1, q_toe2=d2)
    key = "global" if name.startswith("LL") else "toe"
    ts = tendon_state(c, s, REST)
    if ts.F_tendon < 1e-3:
        return
    for j, attr in _JOINTS.items():
        if j == "j4" and c.r_j4 is None:
            continue
        h = 1e-7
        ep = spring_energy_terms(c, replace(s, **{attr: getattr(s, attr) + _SIGN[j] * h}), REST)[key]
        em = spring_energy_terms(c, replace(s, **{attr: getattr(s, attr) - _SIGN[j] * h}), REST)[key]
        dE = (ep - em) / (2 * h)
        assert dE == pytest.approx(ts.torques[j], rel=1e-6, abs=1e-12)


def test_stiffness_sees_the_ankle_ratio():
    c = preset_configuration("LL2SC3")
    assert tendon_stiffness(c) == pytest.approx(c.k_GS)  # r_j2p = r_j2d
    c2 = replace(c, r_j2p=2 * c.r_j2d)
    assert tendon_stiffness(c2) == pytest.approx(4 * c.k_GS)
    assert tendon_stiffness(preset_configuration("TJ1S")) == pytest.approx(4.0e3)
    assert math.isfinite(tendon_state(c, REST, REST).F_tendon)
