"""Push-protocol replay and ground-reaction-force analysis.

A trial starts with the leg at rest length and the touch-down angle, then
advances the hip along the rail towards -x in fixed steps.  Each station is
solved quasi-statically, warm-started from the previous one.  The trial ends
at the onset of sliding (toe-off), at lift-off (after mid-stance the foot
unloads or the leg re-extends to its rest length) or after the maximum
travel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .kinematics import (
    InvalidStateError,
    forward_kinematics,
    joint_angles_from_markers,
    leg_length,
    markers_from_pose,
    state_from_toe,
)
from .params import (
    PRESET_NAMES,
    LegConfiguration,
    ProtocolParams,
    preset_configuration,
)
from .solver import (
    EquilibriumProblem,
    EquilibriumState,
    SolverFailure,
    sliding_margin,
    solve_equilibrium,
)
from .substrate import Heightfield, Substrate, surface_height

FORCE_PLATE_RATE = 250.0  # Hz
MIN_LOAD = 1e-6  # N; stations below this are not checked for sliding
ONSET_RTOL = 1e-4  # onset refinement stops at margin <= ONSET_RTOL * F_v
STONE_WINDOW = 0.03  # m, half the largest stone
TD_SLIDE_TOL = 1e-5  # m
TD_SLIDE_MAX = 0.2  # fraction of the rest length
LIFTOFF_SLACK = 1e-3  # m; after mid-stance a leg this close to rest length has lifted off
FOOTHOLD_TRIES = 4  # alternative hollows tried on uneven ground


class TrialAborted(RuntimeError):
    pass


class NoStanceError(ValueError):
    pass


class ArityError(ValueError):
    pass


TRACE_COLUMNS = ("hip_x", "F_h", "F_v", "cop_x", "sink", "leg_length", "F_tendon", "sliding")


@dataclass
class Trace:
    hip_x: np.ndarray
    F_h: np.ndarray
    F_v: np.ndarray
    cop_x: np.ndarray
    sink: np.ndarray
    leg_length: np.ndarray
    F_tendon: np.ndarray
    sliding: np.ndarray
    j3_x: np.ndarray
    margin: Optional[np.ndarray] = None
    markers: Optional[np.ndarray] = None  # (n, 4, 2): j0, j1, j2, s3
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.hip_x)

    @classmethod
    def from_records(cls, records, metadata=None):
        cols = {k: np.array([r[k] for r in records]) for k in records[0] if k != "markers"}
        markers = np.array([r["markers"] for r in records]) if "markers" in records[0] else None
        cols["sliding"] = cols["sliding"].astype(bool)
        return cls(markers=markers, metadata=dict(metadata or {}), **cols)

    def equals(self, other) -> bool:
        for name in TRACE_COLUMNS + ("j3_x",):
            if not np.array_equal(getattr(self, name), getattr(other, name), equal_nan=name != "sliding"):
                return False
        return self.metadata == other.metadata


@dataclass(frozen=True)
class Events:
    td: int
    ms: int
    to: int
    liftoff: Optional[int] = None


@dataclass(frozen=True)
class TrialResult:
    F_hTO: float
    LL_MS: float
    LL_TO: float
    events: Events
    max_sink: float = 0.0
    slid: bool = False


@dataclass
class TrialSetup:
    config: LegConfiguration
    substrate: Substrate
    protocol: ProtocolParams
    foot_x: float
    hip_y: float
    hip_x_td: float
    rest_length: float
    rest: object
    y_td: float

    def problem(self, hip_x, excavation=0.0, hip_torque=None) -> EquilibriumProblem:
        return EquilibriumProblem(
            self.config,
            self.substrate,
            self.protocol,
            hip_x,
            self.hip_y,
            self.foot_x,
            self.rest,
            excavation,
            hip_torque,
        )


def foothold_candidates(terrain: Heightfield, window: float = STONE_WINDOW, count: int = FOOTHOLD_TRIES):
    """Local minima of the surface within ``window`` of the field centre, lowest first.

    A foot set down on stones settles between them; placing j3 on a steep
    face instead would slide before taking load.
    """
    centre = 0.5 * (terrain.x[0] + terrain.x[-1])
    near = np.flatnonzero(np.abs(terrain.x - centre) <= window)
    h = terrain.h
    lo, hi = near[0], near[-1]
    pits = [i for i in near if (i == lo or h[i] <= h[i - 1]) and (i == hi or h[i] <= h[i + 1])]
    # a flat stretch between stones counts once
    pits = [i for k, i in enumerate(pits) if k == 0 or i != pits[k - 1] + 1]
    pits.sort(key=lambda i: (h[i], abs(terrain.x[i] - centre)))
    return [float(terrain.x[i]) for i in pits[:count]]


def foothold(terrain: Heightfield, window: float = STONE_WINDOW) -> float:
    """Lowest point within ``window`` of the field centre."""
    return foothold_candidates(terrain, window, 1)[0]


def trial_setup(
    config: LegConfiguration, substrate: Substrate, protocol: ProtocolParams, foot_x: Optional[float] = None
) -> TrialSetup:
    """Touch-down geometry: leg at rest length and ``td_angle``, sole just touching."""
    foot = config.foot
    terrain = substrate.heightfield
    if foot_x is None:
        foot_x = 0.0 if terrain is None else foothold(terrain)
    # j3 (or the round foot's nadir) rests on the surface; toes drape from there
    touch = float(surface_height(substrate, foot_x))
    clearance = 0.0 if foot.segmented else foot.radius
    td = math.radians(protocol.td_angle)
    rest_length = (protocol.hip_height - clearance) / math.sin(td)
    geometry = config.geometry
    if rest_length >= geometry.max_leg_length * math.cos(math.radians(2.5)):
        raise InvalidStateError(
            f"touch-down needs a {rest_length:.4f} m leg; the pantograph reaches "
            f"{geometry.max_leg_length:.4f} m"
        )
    hip_y = protocol.hip_height + touch
    y_td = touch + clearance
    hip_x_td = foot_x + rest_length * math.cos(td)
    rest = state_from_toe(geometry, (hip_x_td, hip_y), (foot_x, y_td), math.pi, math.pi)
    return TrialSetup(config, substrate, protocol, foot_x, hip_y, hip_x_td, rest_length, rest, y_td)


def _touchdown_margin(setup: TrialSetup, q_start=None):
    problem = setup.problem(setup.hip_x_td)
    q0 = problem.touchdown_q(setup.y_td)
    if q_start is not None and math.isfinite(problem.energy(q_start)):
        q0 = q_start
    eq = solve_equilibrium(problem, q0)
    return eq, sliding_margin(eq, setup.substrate)


def settle_touchdown(setup: TrialSetup, tol: float = TD_SLIDE_TOL):
    """Let an unloaded foot slip towards the hip until friction holds it.

    With the leg at its extension stop the hip torque is first reacted by the
    foot hold alone; on soft ground that needs more friction than the barely
    loaded foot has, so the foot slides inwards and compresses the leg.  The
    springs keep their touch-down rest state.  Uneven terrain is left alone
    (the foothold already sits in a hollow).  Returns ``(setup, slide)``.
    """
    if setup.substrate.heightfield is not None:
        return setup, 0.0
    eq, m = _touchdown_margin(setup)
    if not _slides(eq, m):
        return setup, 0.0
    lo, hi = 0.0, TD_SLIDE_MAX * setup.rest_length
    held = replace(setup, foot_x=setup.foot_x + hi)
    eq, m = _touchdown_margin(held)
    if _slides(eq, m):
        raise TrialAborted(f"{setup.config.name} cannot settle at touch-down")
    q = eq.q
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        trial = replace(setup, foot_x=setup.foot_x + mid)
        eq, m = _touchdown_margin(trial, q)
        q = eq.q
        if _slides(eq, m) or eq.F_v <= MIN_LOAD:
            lo = mid
        else:
            hi, held = mid, trial
    return held, hi


def marker_kinematics(geometry, markers):
    """Leg length and j3 x-position reconstructed from one marker frame.

    Simulated stations go through the same path as recorded data, so an
    exported trial analyses back to identical numbers.
    """
    state = joint_angles_from_markers(geometry, markers)
    pose = forward_kinematics(geometry, state, pantograph_tol=None)
    return leg_length(pose), float(pose.j3[0])


def _record(setup: TrialSetup, eq: EquilibriumState, hip_x, margin, sliding):
    g = setup.config.geometry
    markers = markers_from_pose(forward_kinematics(g, eq.state))
    length, j3_x = marker_kinematics(g, markers)
    return {
        "hip_x": hip_x,
        "F_h": eq.F_h,
        "F_v": eq.F_v,
        "cop_x": eq.cop_x,
        "sink": eq.sink,
        "leg_length": length,
        "F_tendon": eq.tendon.F_tendon,
        "sliding": sliding,
        "j3_x": j3_x,
        "margin": margin,
        "markers": markers,
    }


def _slides(eq, margin):
    return (not eq.flight) and eq.F_v > MIN_LOAD and margin < 0.0


def run_trial(
    config: LegConfiguration,
    substrate: Substrate,
    protocol: ProtocolParams,
    seed: int = 0,
    stop_at_sliding: bool = True,
    max_travel: Optional[float] = None,
):
    """Simulate one push trial; returns ``(Trace, TrialResult)``.

    On uneven ground a foot wedged against a stone may find no equilibrium;
    the next hollow near the centre is tried then.
    """
    if substrate.heightfield is None:
        return _run_trial(config, substrate, protocol, None, seed, stop_at_sliding, max_travel)
    error = None
    for x in foothold_candidates(substrate.heightfield):
        try:
            return _run_trial(config, substrate, protocol, x, seed, stop_at_sliding, max_travel)
        except TrialAborted as exc:
            error = exc
    raise error


def _run_trial(config, substrate, protocol, foot_x, seed, stop_at_sliding, max_travel):
    setup = trial_setup(config, substrate, protocol, foot_x)
    setup, td_slide = settle_touchdown(setup)
    step = protocol.station_step
    if max_travel is None:
        max_travel = 2.5 * setup.rest_length * math.cos(math.radians(protocol.td_angle))
    n_max = int(math.floor(max_travel / step + 1e-9)) + 1
    rotate_digs = (not substrate.rigid) and (not config.foot.segmented) and substrate.dig_rate > 0
    alpha_td = setup.rest.q_hip

    records = []
    q = setup.problem(setup.hip_x_td).touchdown_q(setup.y_td)
    q_last = None
    workspace = {}
    excavation = 0.0
    loaded = False
    slid = False
    for i in range(n_max):
        hip_x = setup.hip_x_td - i * step
        problem = setup.problem(hip_x, excavation)
        try:
            if q_last is not None and not math.isfinite(problem.energy(q)):
                q = q_last
            eq = solve_equilibrium(problem, q, workspace)
        except (SolverFailure, InvalidStateError, ValueError) as exc:
            raise TrialAborted(f"{config.name} on {substrate.kind.value}: station {i} at hip_x={hip_x:.4f}: {exc}") from exc
        margin = sliding_margin(eq, substrate)
        if stop_at_sliding and _slides(eq, margin):
            if not records:
                raise TrialAborted(f"{config.name} slides at touch-down")
            eq, hip_x, margin = _refine_onset(setup, records[-1]["hip_x"], hip_x, q, excavation)
            records.append(_record(setup, eq, hip_x, margin, True))
            slid = True
            break
        records.append(_record(setup, eq, hip_x, margin, False))
        if eq.F_v > MIN_LOAD:
            loaded = True
        if loaded and hip_x < setup.foot_x:
            if eq.F_v <= MIN_LOAD or records[-1]["leg_length"] >= setup.rest_length - LIFTOFF_SLACK:
                # unloaded, or the leg is back at full length and no longer
                # carries the hip (left over load is the toes being dragged)
                break
        # linear predictor from the last two stations
        q = eq.q if q_last is None else 2.0 * eq.q - q_last
        q_last = eq.q
        if rotate_digs:
            # a round foot turning with segment 3 excavates the granular bed
            turned = abs(eq.state.q_hip - alpha_td)
            excavation = max(excavation, substrate.dig_rate * config.foot.radius * turned)

    metadata = {
        "config": config.name,
        "substrate": substrate.kind.value,
        "seed": int(seed),
        "foot_x": setup.foot_x,
        "td_slide": td_slide,
        "hip_y": setup.hip_y,
        "hip_torque": protocol.hip_torque,
        "td_angle": protocol.td_angle,
        "station_step": protocol.station_step,
        "hip_height": protocol.hip_height,
    }
    trace = Trace.from_records(records, metadata)
    return trace, trial_result(trace, slid=slid)


def _refine_onset(setup, hip_ok, hip_bad, q_ok, excavation):
    """Bisect the hip position where the sliding margin crosses zero.

    When the last good station was unloaded the foot slides as soon as it
    takes load; the first loaded sliding state is returned then.
    """
    problem = setup.problem
    eq_ok = solve_equilibrium(problem(hip_ok, excavation), q_ok)
    m_ok = sliding_margin(eq_ok, setup.substrate)
    eq_bad = None
    for _ in range(60):
        if eq_ok.F_v > MIN_LOAD and m_ok <= ONSET_RTOL * eq_ok.F_v:
            break
        if abs(hip_ok - hip_bad) < 1e-10:
            break
        mid = 0.5 * (hip_ok + hip_bad)
        eq = solve_equilibrium(problem(mid, excavation), eq_ok.q)
        m = sliding_margin(eq, setup.substrate)
        if _slides(eq, m):
            hip_bad, eq_bad = mid, (eq, m)
        else:
            hip_ok, eq_ok, m_ok = mid, eq, m
    if eq_ok.F_v <= MIN_LOAD:
        if eq_bad is None:
            eq = solve_equilibrium(problem(hip_bad, excavation), eq_ok.q)
            eq_bad = (eq, sliding_margin(eq, setup.substrate))
        return eq_bad[0], hip_bad, eq_bad[1]
    return eq_ok, hip_ok, m_ok


# -- events and metrics ----------------------------------------------------

def detect_events(trace: Trace) -> Events:
    n = len(trace)
    if n == 0:
        raise NoStanceError("empty trace")
    loaded = np.flatnonzero(trace.F_v > 0)
    if loaded.size == 0:
        raise NoStanceError("no station carries vertical load")
    td = int(loaded[0])
    slide = np.flatnonzero(trace.sliding[td:])
    to = td + int(slide[0]) if slide.size else n - 1
    window = slice(td, to + 1)
    ms = td + int(np.argmin(np.abs(trace.hip_x[window] - trace.j3_x[window])))
    unloaded = np.flatnonzero(trace.F_v[td:] <= 0)
    liftoff = td + int(unloaded[0]) if unloaded.size else None
    return Events(td, ms, to, liftoff)


def peak_horizontal_force(trace: Trace, to_index: int) -> float:
    return float(np.max(np.abs(trace.F_h[: to_index + 1])))


def trial_result(trace: Trace, slid: Optional[bool] = None) -> TrialResult:
    ev = detect_events(trace)
    window = slice(ev.td, ev.to + 1)
    return TrialResult(
        F_hTO=peak_horizontal_force(trace, ev.to),
        LL_MS=float(trace.leg_length[ev.ms]),
        LL_TO=float(trace.leg_length[ev.to]),
        events=ev,
        max_sink=float(np.max(trace.sink[window])),
        slid=bool(trace.sliding[ev.to]) if slid is None else slid,
    )


def average_force(peaks) -> float:
    peaks = [float(p) for p in peaks]
    if len(peaks) != len(PRESET_NAMES):
        raise ArityError(f"need {len(PRESET_NAMES)} peak forces, got {len(peaks)}")
    return math.fsum(peaks) / len(peaks)


def relative_force(peak: float, avg: float) -> float:
    """Percent deviation of one leg's peak force from the nine-leg average."""
    if not avg > 0:
        raise ValueError(f"average force must be positive, got {avg!r}")
    return (peak - avg) / avg * 100.0


def relative_forces(peaks: dict) -> dict:
    avg = average_force(peaks.values())
    return {leg: relative_force(p, avg) for leg, p in peaks.items()}


def correct_vertical_grf(trace: Trace, pre_level: float, post_level: float, load_per_metre: float = 1324.0) -> Trace:
    """Remove a substrate-level drift from the vertical force.

    The level is assumed to fall linearly from ``pre_level`` to
    ``post_level`` across the trace; ``load_per_metre`` converts level into
    plate load (bulk density * g * box area; default 1500 kg/m^3 over a
    0.3 m x 0.3 m box).
    """
    if not (math.isfinite(pre_level) and math.isfinite(post_level)):
        raise ValueError("levels must be finite")
    n = len(trace)
    w = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(n)
    offset = load_per_metre * (pre_level - post_level) * w
    return replace(trace, F_v=trace.F_v + offset)


# -- CoP study -------------------------------------------------------------

def cop_sweep(r_j3_values, protocol: ProtocolParams = ProtocolParams(), substrate: Optional[Substrate] = None, base: str = "LL1S"):
    """CoP trajectory of a one-segment LL foot for each toe pulley radius [m].

    The leg vaults over the foot along the full rail stroke; sliding is not
    checked.  Returns ``{radius: (hip_x, cop_x)}``.
    """
    from .substrate import substrate_preset

    if substrate is None:
        substrate = substrate_preset("wood")
    out = {}
    for r in r_j3_values:
        config = replace(preset_configuration(base), r_j3=float(r))
        trace, _ = run_trial(config, substrate, protocol, stop_at_sliding=False)
        loaded = trace.F_v > 0
        out[float(r)] = (trace.hip_x[loaded], trace.cop_x[loaded])
    return out


def max_cop_excursion(trajectories: dict) -> dict:
    return {r: float(np.max(cop)) for r, (_, cop) in trajectories.items()}


# -- external data ---------------------------------------------------------

def detect_sliding_onset(F_h, F_v, drop_fraction=0.2, window=5, min_force=1.0) -> Optional[int]:
    """Last sample before a simultaneous sudden drop of |F_h| and F_v."""
    fh = np.abs(np.asarray(F_h, float))
    fv = np.asarray(F_v, float)
    n = len(fh)
    for i in range(n - 1):
        if fh[i] < min_force or fv[i] < min_force:
            continue
        j = min(i + window, n - 1)
        later_h = fh[i + 1 : j + 1]
        later_v = fv[i + 1 : j + 1]
        drop_h = later_h < (1.0 - drop_fraction) * fh[i]
        drop_v = later_v < (1.0 - drop_fraction) * fv[i]
        if np.any(drop_h & drop_v) and fh[i + 1] < fh[i] and fv[i + 1] < fv[i]:
            return i
    return None


def trace_from_recordings(geometry, t, F_h, F_v, marker_t, markers, metadata=None, drop_fraction=0.2) -> Trace:
    """Build a Trace from force-plate samples and (possibly slower) marker frames.

    Each force sample takes the nearest marker frame in time.
    """
    t = np.asarray(t, float)
    marker_t = np.asarray(marker_t, float)
    markers = np.asarray(markers, float).reshape(len(marker_t), 4, 2)
    idx = np.clip(np.searchsorted(marker_t, t), 0, len(marker_t) - 1)
    prev = np.clip(idx - 1, 0, len(marker_t) - 1)
    idx = np.where(np.abs(marker_t[prev] - t) <= np.abs(marker_t[idx] - t), prev, idx)

    lengths = np.empty(len(marker_t))
    j3x = np.empty(len(marker_t))
    for k, m in enumerate(markers):
        lengths[k], j3x[k] = marker_kinematics(geometry, m)
    F_h = np.asarray(F_h, float)
    F_v = np.asarray(F_v, float)
    n = len(t)
    sliding = np.zeros(n, dtype=bool)
    onset = detect_sliding_onset(F_h, F_v, drop_fraction)
    sliding[onset if onset is not None else n - 1] = True
    nan = np.full(n, np.nan)
    return Trace(
        hip_x=markers[idx, 0, 0],
        F_h=F_h,
        F_v=F_v,
        cop_x=nan,
        sink=np.zeros(n),
        leg_length=lengths[idx],
        F_tendon=nan.copy(),
        sliding=sliding,
        j3_x=j3x[idx],
        markers=markers[idx],
        metadata=dict(metadata or {}),
    )


def analyze_recordings(geometry, t, F_h, F_v, marker_t, markers) -> TrialResult:
    trace = trace_from_recordings(geometry, t, F_h, F_v, marker_t, markers)
    return trial_result(trace)


# -- sweeps ----------------------------------------------------------------

@dataclass
class SweepResult:
    results: dict  # (leg, substrate) -> TrialResult (stone: seed-averaged)
    per_seed: dict  # (leg, substrate, seed) -> TrialResult
    failures: list
    dF: dict  # substrate -> {leg: dF %}
    timings: dict = field(default_factory=dict)  # (leg, substrate, seed) -> seconds


def _mean_result(results):
    if len(results) == 1:
        return results[0]
    first = results[0]
    return TrialResult(
        F_hTO=math.fsum(r.F_hTO for r in results) / len(results),
        LL_MS=math.fsum(r.LL_MS for r in results) / len(results),
        LL_TO=math.fsum(r.LL_TO for r in results) / len(results),
        events=first.events,
        max_sink=math.fsum(r.max_sink for r in results) / len(results),
        slid=all(r.slid for r in results),
    )


def sweep(protocol: ProtocolParams = ProtocolParams(), substrates=("wood", "stone", "pebbles", "sand"), legs=PRESET_NAMES, stone_seeds=range(10), seed=0) -> SweepResult:
    """Nine legs x four substrates; stone is averaged over ``stone_seeds``."""
    from .substrate import substrate_preset

    per_seed = {}
    failures = []
    results = {}
    timings = {}
    for sub_name in substrates:
        seeds = list(stone_seeds) if sub_name == "stone" else [seed]
        for leg in legs:
            config = preset_configuration(leg)
            runs = []
            for s in seeds:
                substrate = substrate_preset(sub_name, seed=s)
                t0 = time.perf_counter()
                try:
                    _, res = run_trial(config, substrate, protocol, seed=s)
                except TrialAborted as exc:
                    failures.append((leg, sub_name, s, str(exc)))
                    continue
                finally:
                    timings[(leg, sub_name, s)] = time.perf_counter() - t0
                per_seed[(leg, sub_name, s)] = res
                runs.append(res)
            if runs:
                results[(leg, sub_name)] = _mean_result(runs)
    dF = {}
    for sub_name in substrates:
        peaks = {leg: results[(leg, sub_name)].F_hTO for leg in legs if (leg, sub_name) in results}
        if len(peaks) == len(PRESET_NAMES):
            dF[sub_name] = relative_forces(peaks)
    return SweepResult(results, per_seed, failures, dF, timings)
