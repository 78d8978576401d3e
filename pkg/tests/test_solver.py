import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from birdfoot.harness import trial_setup
from birdfoot.kinematics import forward_kinematics, pantograph_state
from birdfoot.params import MM, PRESET_NAMES, ProtocolParams, preset_configuration
from birdfoot.solver import (
    GRAD_TOL,
    ContactSet,
    EquilibriumProblem,
    EquilibriumState,
    NoContactError,
    SolverFailure,
    center_of_pressure,
    contact_candidates,
    damped_newton,
    potential_energy,
    potential_gradient,
    rigid_penalty,
    sliding_margin,
    solve_equilibrium,
)
from birdfoot.substrate import Substrate, SubstrateKind, substrate_preset

WOOD = substrate_preset("wood")
NO_TORQUE = ProtocolParams(hip_torque=0.0)


def mid_stance(name, compression=0.030, protocol=NO_TORQUE, substrate=WOOD, config=None):
    """Hip straight above j3 with the leg ``compression`` shorter than at touch-down."""
    config = config or preset_configuration(name)
    setup = trial_setup(config, substrate, ProtocolParams())
    clearance = 0.0 if config.foot.segmented else config.foot.radius
    hip_y = setup.rest_length - compression + clearance
    return EquilibriumProblem(config, substrate, protocol, 0.0, hip_y, 0.0, setup.rest), setup


def compass(f, q0, steps, tol=1e-13):
    """Derivative-free coordinate search; an oracle independent of the Newton solver."""
    q = np.array(q0, float)
    fq = f(q)
    h = np.array(steps, float)
    while np.max(h / steps) > tol:
        for i in range(len(q)):
            for s in (1.0, -1.0):
                t = q.copy()
                t[i] += s * h[i]
                ft = f(t)
                if ft < fq:
                    q, fq = t, ft
                    break
            else:
                continue
            break
        else:
            h *= 0.5
    return q, fq


# -- contact candidates ---------------------------------------------------------

def test_one_segment_foot_samples():
    c = preset_configuration("LL1S")
    foot = replace(c.foot, contact_sample_count=5)
    pose = forward_kinematics(c.geometry, pantograph_state(-1.2, 2.6, math.pi - (-1.2 + math.pi) + math.pi), foot)
    cs = contact_candidates(foot, pose, WOOD)
    assert len(cs.positions) == 5
    gaps = np.hypot(*np.diff(cs.positions, axis=0).T)
    assert gaps == pytest.approx(np.full(4, 0.078 / 4), abs=1e-12)
    assert cs.positions[0] == pytest.approx(pose.j3, abs=1e-15)


def test_ball_foot_contact_is_lowest_point_of_the_rolled_circle():
    c = preset_configuration("BF")
    r = c.geometry.r_bf
    for turn in (0.0, math.radians(10)):
        pose = forward_kinematics(c.geometry, pantograph_state(-math.pi / 2 + turn, math.pi, hip_pose=(0.0, 0.48 + r)))
        cs = contact_candidates(c.foot, pose, WOOD)
        centre = pose.j3
        assert cs.positions[0] == pytest.approx([centre[0], centre[1] - r], abs=1e-12)
        # the material point that touched before turning is now r*sin(turn) aside
        moved = centre + r * np.array([math.cos(-math.pi / 2 + turn), math.sin(-math.pi / 2 + turn)])
        assert abs(moved[0] - cs.positions[0][0]) == pytest.approx(r * math.sin(turn), abs=1e-12)


def test_lifted_distal_toe_is_not_engaged():
    c = preset_configuration("LL2SC1")
    hip = (0.2367, 0.41)
    from birdfoot.kinematics import state_from_toe

    # toe segment 1 flat on the ground, toe segment 2 turned 30 degrees upwards
    state = state_from_toe(c.geometry, hip, (0.0, 0.0), math.pi, math.pi - math.radians(30))
    pose = forward_kinematics(c.geometry, state, c.foot)
    cs = contact_candidates(c.foot, pose, WOOD)
    distal = cs.positions[:, 0] < pose.j4[0] - 1e-9
    assert np.all(cs.penetration[distal] < 0) and not np.any(cs.engaged[distal])


# -- potential energy -------------------------------------------------------------

def test_rest_pose_energy_is_zero():
    p, setup = mid_stance("LL2SC1", compression=0.0)
    p = EquilibriumProblem(p.config, WOOD, NO_TORQUE, setup.hip_x_td, setup.hip_y, 0.0, setup.rest)
    assert potential_energy(p, p.touchdown_q(0.0)) == pytest.approx(0.0, abs=1e-15)


def test_rigid_penalty_is_half_k_x_squared():
    e, f = rigid_penalty(1e6, np.array([1e-3]))
    assert e == pytest.approx(0.5, rel=1e-12)
    assert f[0] == pytest.approx(1e3, rel=1e-12)


@given(st.floats(1e-4, 0.03))
def test_granular_energy_is_half_k_a_z_squared(z):
    """A flat 1S sole pressed ``z`` into an n=1 bed stores k A z^2 / 2."""
    k = 2e6
    bed = Substrate(SubstrateKind.CUSTOM, mu=0.5, sinkage_k=k, sinkage_n=1.0)
    air = Substrate(SubstrateKind.CUSTOM, mu=0.5, sinkage_k=1e-300, sinkage_n=1.0)
    p_bed, _ = mid_stance("LL1S", substrate=bed)
    p_air, _ = mid_stance("LL1S", substrate=air)
    q = np.array([-z, math.pi])
    area = p_bed.config.foot.projected_area
    contact = potential_energy(p_bed, q) - potential_energy(p_air, q)
    assert contact == pytest.approx(0.5 * k * area * z * z, rel=1e-9)


# -- equilibrium ------------------------------------------------------------------

def test_touchdown_pose_on_wood_is_almost_unloaded():
    c = preset_configuration("LL2SC2")
    setup = trial_setup(c, WOOD, NO_TORQUE)
    eq = solve_equilibrium(setup.problem(setup.hip_x_td), setup.problem(setup.hip_x_td).touchdown_q(setup.y_td))
    assert eq.F_v <= 0.5


def test_mid_stance_vertical_force_matches_brute_force_oracle():
    """F_v = -dV*/d(hip height), from two independently minimised energies."""
    p, setup = mid_stance("LL2SC1")
    eq = solve_equilibrium(p, p.touchdown_q(0.0))
    h = 3e-6

    def vstar(dy):
        pp = replace(p, hip_y=p.hip_y + dy)
        return compass(lambda q: potential_energy(pp, q), p.touchdown_q(0.0), [1e-3, 0.05, 0.05])[1]

    oracle = -(vstar(h) - vstar(-h)) / (2 * h)
    assert eq.F_v == pytest.approx(oracle, rel=0.01)
    assert eq.F_v > 10.0


def test_mid_stance_horizontal_force_vanishes_without_torque():
    p0, _ = mid_stance("LL2SC1")
    p2, _ = mid_stance("LL2SC1", protocol=ProtocolParams(hip_torque=2.0))
    F0 = solve_equilibrium(p0, p0.touchdown_q(0.0)).F_h
    F2 = solve_equilibrium(p2, p2.touchdown_q(0.0)).F_h
    assert abs(F0) <= 0.5
    assert abs(F2 - F0) > 1.0


def test_solution_is_a_converged_minimum():
    p, _ = mid_stance("TJ2SC1", protocol=ProtocolParams())
    eq = solve_equilibrium(p, p.touchdown_q(0.0))
    assert eq.residual <= GRAD_TOL
    g = potential_gradient(p, eq.q) * p.scale
    assert np.max(np.abs(g)) <= GRAD_TOL


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_force_balance_and_cop_hull_on_flat_rigid_ground(name):
    config = preset_configuration(name)
    setup = trial_setup(config, WOOD, ProtocolParams())
    q = setup.problem(setup.hip_x_td).touchdown_q(setup.y_td)
    for k in range(0, 200, 25):
        eq = solve_equilibrium(setup.problem(setup.hip_x_td - k * 1e-3), q)
        q = eq.q
        c = eq.contacts
        assert abs(eq.F_v - float(np.sum(c.normal[c.engaged]))) <= 1e-6
        assert eq.residual <= GRAD_TOL
        if not eq.flight:
            x = c.local_x[c.engaged]
            assert x.min() - 1e-12 <= eq.cop_x <= x.max() + 1e-12


def test_larger_toe_pulley_loads_the_toe_more():
    shares = []
    for r in (1.0, 3.2, 9.0):
        config = replace(preset_configuration("LL1S"), r_j3=r * MM)
        p, _ = mid_stance("LL1S", protocol=ProtocolParams(), config=config)
        eq = solve_equilibrium(p, p.touchdown_q(0.0))
        c = eq.contacts
        shares.append(c.vertical[c.local_x > 1e-9].sum() / eq.F_v)
    assert shares[0] < shares[1] < shares[2]


def test_determinism():
    p, _ = mid_stance("LL2SC3", protocol=ProtocolParams())
    a = solve_equilibrium(p, p.touchdown_q(0.0))
    b = solve_equilibrium(p, p.touchdown_q(0.0))
    assert np.array_equal(a.q, b.q) and a.F_h == b.F_h and a.F_v == b.F_v and a.cop_x == b.cop_x


def test_non_convergence_carries_residual():
    p, _ = mid_stance("LL1S", protocol=ProtocolParams())
    with pytest.raises(SolverFailure) as info:
        damped_newton(p.energy_and_gradient, p.touchdown_q(0.0) + [1e-3, 0.1], p.scale, max_iter=1)
    assert info.value.residual > GRAD_TOL


def test_lifted_foot_is_flight_not_error():
    p, _ = mid_stance("BF", compression=-0.010)
    eq = solve_equilibrium(p, p.touchdown_q(p.config.foot.radius + 0.010))
    assert eq.flight and eq.F_v == 0.0 and eq.F_h == 0.0
    assert sliding_margin(eq, WOOD) == 0.0


# -- centre of pressure and sliding margin ---------------------------------------

def _contacts(local_x, N, tangential=None):
    local_x = np.asarray(local_x, float)
    N = np.asarray(N, float)
    n = len(N)
    return ContactSet(
        positions=np.column_stack([-local_x, np.zeros(n)]),
        engaged=np.ones(n, bool),
        penetration=np.zeros(n),
        normal=N,
        vertical=N,
        tangential=np.zeros(n) if tangential is None else np.asarray(tangential, float),
        area=np.full(n, 12e-4 / n),
        depth=np.zeros(n),
    )


def test_cop_examples():
    assert center_of_pressure(_contacts([0.0, 0.078], [5.0, 5.0])) == pytest.approx(0.039)
    assert center_of_pressure(_contacts([0.020], [7.0])) == pytest.approx(0.020)
    # oracle: (10 * 0 + 30 * 78) / 40 mm
    assert center_of_pressure(_contacts([0.0, 0.078], [10.0, 30.0])) == pytest.approx(0.0585)
    with pytest.raises(NoContactError):
        center_of_pressure(_contacts([0.0], [0.0]))


@given(st.lists(st.tuples(st.floats(0.0, 0.078), st.floats(0.01, 100.0)), min_size=1, max_size=9))
def test_cop_inside_contact_hull(points):
    x, N = zip(*points)
    cop = center_of_pressure(_contacts(x, N))
    assert min(x) - 1e-12 <= cop <= max(x) + 1e-12


def _state(contacts, flight=False):
    F_h = float(contacts.tangential.sum())
    return EquilibriumState(None, None, contacts, F_h, float(contacts.vertical.sum()), 0.0, 0.0, 0.0, None, flight)


def test_sliding_margin_examples():
    assert sliding_margin(_state(_contacts([0.0], [40.0], [10.0])), WOOD) == pytest.approx(14.0)
    assert sliding_margin(_state(_contacts([0.0], [40.0], [24.0])), WOOD) == pytest.approx(0.0, abs=1e-12)
    assert sliding_margin(_state(_contacts([0.0], [0.0]), flight=True), WOOD) == 0.0


# -- gradient check ----------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(PRESET_NAMES),
    st.sampled_from(["wood", "stone", "pebbles", "sand"]),
    st.floats(-0.01, 0.01),
    st.floats(-0.4, 0.4),
    st.floats(-0.4, 0.4),
    st.floats(-0.05, 0.05),
)
def test_gradient_matches_central_differences(name, sub_name, dy, d1, d2, dx):
    config = preset_configuration(name)
    sub = substrate_preset(sub_name)
    setup = trial_setup(config, sub, ProtocolParams())
    p = setup.problem(setup.hip_x_td - 0.1 + dx)
    q = p.touchdown_q(setup.y_td) + np.array([dy, d1, d2])[: p.dim]
    if not math.isfinite(potential_energy(p, q)):
        return
    g = potential_gradient(p, q) * p.scale

    def five_point(i, h):
        e = np.zeros(p.dim)
        e[i] = h * p.scale[i]
        f = lambda k: potential_energy(p, q + k * e)  # noqa: E731
        return (8.0 * (f(1) - f(-1)) - (f(2) - f(-2))) / (12.0 * h)

    # several steps: a stencil may straddle a stone edge, or the first touch of
    # a contact point where the energy is only C2
    err = min(np.max(np.abs(g - [five_point(i, h) for i in range(p.dim)])) for h in (1e-5, 1e-6, 1e-7))
    assert err / max(np.max(np.abs(g)), 1e-3) <= 1e-6
