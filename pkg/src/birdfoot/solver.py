"""Quasi-static equilibrium of the leg and foot at one hip station.

The hip sits on a horizontal rail at ``(hip_x, hip_y)``; toe joint j3 is
held horizontally at ``foot_x`` (stick contact) and is free vertically.  The
reduced coordinates are

* segmented feet: ``q = [y3, psi1(, psi2)]`` with ``y3`` the height of j3 and
  ``psi`` the absolute directions of the toe segments;
* ball and cylinder feet: ``q = [y3]`` (the round foot is rigid with
  segment 3 and centred on j3).

The total potential is springs + joint stops - hip torque * segment-1 angle +
contact penalty.  Its minimiser is the equilibrium; the ground reaction is
the gradient of the leg-side energy with respect to the j3 position.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kinematics import JointState
from .params import Coupling, FootKind, LegConfiguration, ProtocolParams
from .substrate import Substrate, surface_height, surface_slope, tangential_capacity
from .tendon import LL_WRAPS_KNEE, TendonState, tendon_stiffness

JOINT_MIN = math.radians(5.0)
JOINT_MAX = math.radians(175.0)
# toe joint 2 sits at pi when straight; its stops keep the same 85 deg travel
TOE2_MIN = math.pi - math.radians(85.0)
TOE2_MAX = math.pi + math.radians(85.0)
STOP_STIFFNESS = 1e3  # N*m/rad
PENALTY_ONSET = 1e-5  # m of rigid penetration over which the stiffness ramps up

GRAD_TOL = 1e-8
MAX_STEP = 0.3  # scaled units: 0.3 rad or 3 mm per Newton step
MAX_ITER = 500
Y_SCALE = 1e-2  # m; converts the y-gradient [N] into J for the stopping test

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


class SolverFailure(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NoContactError(ValueError):
    pass


@dataclass
class ContactSet:
    positions: np.ndarray  # (n, 2) world positions [m]
    engaged: np.ndarray
    penetration: np.ndarray  # vertical penetration below the (dug) surface [m]
    normal: np.ndarray  # normal force magnitude [N]
    vertical: np.ndarray  # vertical component of the normal force [N]
    tangential: np.ndarray  # share of F_h carried by each point [N]
    area: np.ndarray  # bearing area per point [m^2]
    depth: np.ndarray  # depth below the undisturbed surface [m]
    foot_x: float = 0.0

    @property
    def local_x(self) -> np.ndarray:
        """Foot-frame coordinate: distance ahead of j3 towards the toe tip."""
        return self.foot_x - self.positions[:, 0]


@dataclass
class EquilibriumState:
    state: JointState
    tendon: TendonState
    contacts: ContactSet
    F_h: float
    F_v: float
    cop_x: float
    sink: float
    residual: float
    q: np.ndarray
    flight: bool
    iterations: int = 0
    energy: float = 0.0


# -- round-foot bearing --------------------------------------------------

def bearing_area(foot, depth: float) -> float:
    """Horizontal cross-section of a round foot at ``depth`` below its nadir."""
    if depth <= 0:
        return 0.0
    r = foot.radius
    z = min(depth, r)
    if foot.kind is FootKind.BALL:
        return math.pi * (2.0 * r * z - z * z)
    return 2.0 * foot.width * math.sqrt(2.0 * r * z - z * z)


def bearing_energy(foot, k: float, n: float, depth: float) -> float:
    """Work of the pressure-sinkage law over the round foot's bearing area."""
    if depth <= 0:
        return 0.0
    r = foot.radius
    z = min(depth, r)
    if foot.kind is FootKind.BALL:
        e = math.pi * k * (2.0 * r * z ** (n + 2) / (n + 2) - z ** (n + 3) / (n + 3))
    else:
        # t = u**2 removes the square-root endpoint singularity
        ub = math.sqrt(z)
        u = 0.5 * ub * (_GL_NODES + 1.0)
        f = u ** (2 * n + 2) * np.sqrt(2.0 * r - u * u)
        e = 4.0 * foot.width * k * 0.5 * ub * float(np.dot(_GL_WEIGHTS, f))
    if depth > r:
        e += k * bearing_area(foot, r) * (depth ** (n + 1) - r ** (n + 1)) / (n + 1)
    return e


def _penalty1(K: float, d: float, pen: float):
    """Energy, force and stiffness of the rigid penalty at one point (pen > 0)."""
    if pen >= d:
        return 0.5 * K * pen * pen, K * pen, K
    t = pen / d
    return (
        K * d * d * t * t * t * (1.5 - 1.5 * t + 0.5 * t * t),
        K * d * t * t * (4.5 - 6.0 * t + 2.5 * t * t),
        K * t * (9.0 - 18.0 * t + 10.0 * t * t),
    )


def rigid_penalty(K: float, pen: np.ndarray, onset: Optional[float] = None):
    """Energy and per-point force of the rigid-contact penalty.

    Beyond ``onset`` the penalty is the plain spring ``K p**2 / 2``.  Below
    it a quartic force ramp starts with zero stiffness and meets the spring
    in force, stiffness and stored energy, so the contact Hessian stays
    continuous when a point touches down.
    """
    d = PENALTY_ONSET if onset is None else onset
    pen = np.asarray(pen, dtype=float)
    t = np.clip(pen / d, 0.0, 1.0)
    soft = pen < d
    f = np.where(soft, K * d * t * t * (4.5 - 6.0 * t + 2.5 * t * t), K * pen)
    e = np.where(soft, K * d * d * t**3 * (1.5 - 1.5 * t + 0.5 * t * t), 0.5 * K * pen * pen)
    return float(e.sum()), f


def _stop(value, lo, hi):
    """Energy and derivative of a two-sided quadratic range stop."""
    if value < lo:
        d = value - lo
    elif value > hi:
        d = value - hi
    else:
        return 0.0, 0.0
    return 0.5 * STOP_STIFFNESS * d * d, STOP_STIFFNESS * d


_TABLES: dict = {}


def _terrain_tables(terrain):
    """Slope and midpoint tables of a heightfield, shared by all stations of a trial."""
    hit = _TABLES.get(id(terrain))
    if hit is not None and hit[0] is terrain:
        return hit[1]
    dx = np.diff(terrain.x)
    slopes = np.diff(terrain.h) / dx
    mids = 0.5 * (terrain.x[:-1] + terrain.x[1:])
    hmid = 0.5 * (terrain.h[:-1] + terrain.h[1:])
    tables = (
        terrain.x, terrain.h, slopes, mids, hmid,
        mids.tolist(), hmid.tolist(), slopes.tolist(),
        (float(terrain.x[0]), float(terrain.x[-1])),
        # direct indexing on evenly spaced samples (the generated fields)
        1.0 / float(dx[0]) if np.allclose(dx, dx[0], rtol=1e-9, atol=0.0) else None,
    )
    if len(_TABLES) > 32:
        _TABLES.clear()
    _TABLES[id(terrain)] = (terrain, tables)
    return tables


@dataclass
class EquilibriumProblem:
    """Everything needed to evaluate the potential at one hip station.

    ``rest`` is the touch-down state where every spring is unloaded; its knee
    angle is also the extension stop of the spring-loaded leg.
    """

    config: LegConfiguration
    substrate: Substrate
    protocol: ProtocolParams
    hip_x: float
    hip_y: float
    foot_x: float
    rest: JointState
    excavation: float = 0.0
    hip_torque: Optional[float] = None
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.hip_torque is None:
            self.hip_torque = self.protocol.hip_torque
        cfg = self.config
        g = cfg.geometry
        foot = cfg.foot
        self._a = g.l_ls1 + g.l_ls3
        self._b = g.l_ls2
        self.round_foot = not foot.segmented
        if foot.kind is FootKind.TWO_SEGMENT:
            self.dim = 3
        elif foot.kind is FootKind.ONE_SEGMENT:
            self.dim = 2
        else:
            self.dim = 1
        if foot.segmented:
            n = foot.contact_sample_count
            s = np.linspace(0.0, foot.sole_length, n)
            l1 = foot.segment_lengths[0]
            on1 = s <= l1 + 1e-15
            self._s1 = np.where(on1, s, l1)
            self._s2 = np.where(on1, 0.0, s - l1)
            self._area = np.full(n, foot.projected_area / n)
        self._K = tendon_stiffness(cfg) if cfg.has_tendon else 0.0
        self._r2 = cfg.r_j2d if cfg.coupling is Coupling.LEG_LENGTH else 0.0
        self._r1 = g.r_j1 if cfg.coupling is Coupling.LEG_LENGTH and LL_WRAPS_KNEE else 0.0
        self._r3 = cfg.r_j3 or 0.0
        self._r4 = cfg.r_j4 or 0.0
        self.scale = np.array([Y_SCALE, 1.0, 1.0][: self.dim])
        terrain = self.substrate.heightfield
        if terrain is not None:
            (self._hx, self._hh, self._slopes, self._mids, self._hmid,
             self._mids_l, self._hmid_l, self._slopes_l, self._xrange, self._inv_dx) = _terrain_tables(terrain)
        if foot.segmented:
            self._pts = list(zip(self._s1.tolist(), self._s2.tolist(), self._area.tolist()))

    def _terrain(self, px):
        """Surface height and slope under the contact points (hot path).

        Between neighbouring segment midpoints the slope blends linearly, so
        the contact penalty stays C1 across heightfield nodes.  The surface
        differs from the linear interpolant by at most ``dslope * dx / 8``.
        """
        if self.substrate.heightfield is None:
            return np.zeros_like(px), np.zeros_like(px)
        hx = self._hx
        if px.min() < hx[0] or px.max() > hx[-1]:
            # the public functions raise the range error
            return surface_height(self.substrate, px), surface_slope(self.substrate, px)
        mids, sl = self._mids, self._slopes
        j = np.clip(np.searchsorted(mids, px, side="right") - 1, 0, len(mids) - 2)
        w = px - mids[j]
        L = mids[j + 1] - mids[j]
        a, b = sl[j], sl[j + 1]
        past = w > L
        # beyond the first or last midpoint the end segment is used as is
        blend = np.where((w >= 0.0) & ~past, (b - a) / L, 0.0)
        h = np.where(past, self._hmid[j + 1] + b * (w - L), self._hmid[j] + a * w + 0.5 * blend * w * w)
        return h, np.where(past, b, a + blend * w)

    def _terrain1(self, x):
        """Scalar version of ``_terrain``."""
        lo, hi = self._xrange
        if x < lo or x > hi:
            return surface_height(self.substrate, x), surface_slope(self.substrate, x)
        mids = self._mids_l
        if self._inv_dx:
            j = int((x - mids[0]) * self._inv_dx // 1.0)
        else:
            j = bisect.bisect_right(mids, x) - 1
        j = min(max(j, 0), len(mids) - 2)
        w = x - mids[j]
        L = mids[j + 1] - mids[j]
        a = self._slopes_l[j]
        b = self._slopes_l[j + 1]
        if w > L:
            return self._hmid_l[j + 1] + b * (w - L), b
        if w < 0.0:
            return self._hmid_l[j] + a * w, a
        blend = (b - a) / L
        return self._hmid_l[j] + a * w + 0.5 * blend * w * w, a + blend * w

    # -- leg ---------------------------------------------------------
    def _leg(self, y):
        """Segment-1 angle, knee angle and their y/x derivatives for j3 at (foot_x, y)."""
        a, b = self._a, self._b
        vx = self.foot_x - self.hip_x
        vy = y - self.hip_y
        d2 = vx * vx + vy * vy
        d = math.sqrt(d2)
        c = (d2 - a * a - b * b) / (2.0 * a * b)
        if not -1.0 < c < 1.0:
            return None
        gamma = math.acos(c)
        sg = math.sin(gamma)
        cg = c
        delta = math.atan2(b * sg, a + b * cg)
        alpha = math.atan2(vy, vx) - delta
        dgam_dd = -d / (a * b * sg)
        ddel_dgam = b * (b + a * cg) / d2
        # derivatives along y and x of the j3 position
        dd_dy, dd_dx = vy / d, vx / d
        dth_dy, dth_dx = vx / d2, -vy / d2
        k = ddel_dgam * dgam_dd
        return (
            alpha,
            math.pi - gamma,
            dth_dy - k * dd_dy,
            dth_dx - k * dd_dx,
            -dgam_dd * dd_dy,
            -dgam_dd * dd_dx,
        )

    def joint_state(self, q) -> JointState:
        leg = self._leg(q[0])
        if leg is None:
            raise ValueError("hip-toe distance unreachable")
        alpha, qk = leg[0], leg[1]
        psi1 = q[1] if self.dim > 1 else math.pi
        psi2 = q[2] if self.dim > 2 else psi1
        return JointState(
            alpha, qk, qk, psi1 - (alpha + math.pi), math.pi - (psi2 - psi1), (self.hip_x, self.hip_y)
        )

    def _leg_energy(self, q, want_grad=True):
        """Leg-side energy; gradient w.r.t. (y, psi1, psi2) plus d/dx of j3."""
        leg = self._leg(q[0])
        if leg is None:
            return math.inf, None, None
        alpha, qk, da_dy, da_dx, dk_dy, dk_dx = leg
        rest = self.rest
        dim = self.dim
        psi1 = q[1] if dim > 1 else None
        psi2 = q[2] if dim > 2 else psi1

        E = -self.hip_torque * alpha
        gk = 0.0  # dE/dq_knee
        g1 = 0.0  # dE/dq_toe1
        g2 = 0.0  # dE/dq_toe2

        ek = self.config.geometry.r_j1 * (rest.q_knee - qk)
        if ek > 0:
            E += 0.5 * self.config.k_BS * ek * ek
            gk -= self.config.k_BS * ek * self.config.geometry.r_j1

        if psi1 is not None:
            q1 = psi1 - alpha - math.pi
            q2 = math.pi - psi2 + psi1
        else:
            q1, q2 = rest.q_toe1, rest.q_toe2

        if self._K > 0:
            e = (
                self._r2 * (rest.q_ankle - qk)
                + self._r1 * (rest.q_knee - qk)
                + self._r3 * (rest.q_toe1 - q1)
                + self._r4 * (q2 - rest.q_toe2)
            )
            if e > 0:
                E += 0.5 * self._K * e * e
                f = self._K * e
                gk -= f * (self._r2 + self._r1)
                g1 -= f * self._r3
                g2 += f * self._r4

        es, gs = _stop(qk, JOINT_MIN, rest.q_knee)
        E += es
        gk += gs
        if psi1 is not None:
            es, gs = _stop(q1, JOINT_MIN, JOINT_MAX)
            E += es
            g1 += gs
            if dim > 2:
                es, gs = _stop(q2, TOE2_MIN, TOE2_MAX)
                E += es
                g2 += gs

        if not want_grad:
            return E, None, None
        # q1 = psi1 - alpha - pi, q2 = pi - psi2 + psi1
        dy = -self.hip_torque * da_dy + gk * dk_dy - g1 * da_dy
        dx = -self.hip_torque * da_dx + gk * dk_dx - g1 * da_dx
        if dim == 1:
            grad = (dy,)
        elif dim == 2:
            grad = (dy, g1)  # q2 is pinned when both toe angles move together
        else:
            grad = (dy, g1 + g2, -g2)
        return E, grad, dx

    # -- contact -----------------------------------------------------
    def _points(self, q):
        y = q[0]
        if self.round_foot:
            return np.array([self.foot_x]), np.array([y - self.config.foot.radius]), None, None
        c1, s1 = math.cos(q[1]), math.sin(q[1])
        if self.dim > 2:
            c2, s2 = math.cos(q[2]), math.sin(q[2])
        else:
            c2, s2 = c1, s1
        px = self.foot_x + self._s1 * c1 + self._s2 * c2
        py = y + self._s1 * s1 + self._s2 * s2
        dpsi1 = (-self._s1 * s1, self._s1 * c1)
        dpsi2 = (-self._s2 * s2, self._s2 * c2)
        return px, py, dpsi1, dpsi2

    def _contact(self, q, want_grad=True):
        sub = self.substrate
        px, py, dpsi1, dpsi2 = self._points(q)
        h, hp = self._terrain(px)
        pen = h - self.excavation - py if self.round_foot else h - py
        pos = np.maximum(pen, 0.0)
        if sub.rigid:
            E, f = rigid_penalty(sub.penalty, pos)
        elif self.round_foot:
            foot = self.config.foot
            z = float(pos[0])
            E = bearing_energy(foot, sub.sinkage_k, sub.sinkage_n, z)
            f = np.array([sub.sinkage_k * z**sub.sinkage_n * bearing_area(foot, z)])
        else:
            n = sub.sinkage_n
            pn = pos**n
            E = float(np.dot(self._area * sub.sinkage_k, pn * pos)) / (n + 1)
            f = sub.sinkage_k * self._area * pn
        if not want_grad:
            return E, None, (px, py, pen, f, hp)
        grad = np.empty(self.dim)
        grad[0] = -float(f.sum())
        if self.dim > 1:
            grad[1] = float(np.dot(f, hp * dpsi1[0] - dpsi1[1]))
        if self.dim > 2:
            grad[2] = float(np.dot(f, hp * dpsi2[0] - dpsi2[1]))
        return E, grad, (px, py, pen, f, hp)

    def _sole_fast(self, q):
        """Energy and gradient of the segmented-sole contact (scalar hot path)."""
        sub = self.substrate
        y, x0 = q[0], self.foot_x
        c1, s1 = math.cos(q[1]), math.sin(q[1])
        if self.dim > 2:
            c2, s2 = math.cos(q[2]), math.sin(q[2])
        else:
            c2, s2 = c1, s1
        flat = sub.heightfield is None
        rigid = sub.rigid
        if rigid:
            K, d = sub.penalty, PENALTY_ONSET
        else:
            k, n = sub.sinkage_k, sub.sinkage_n
        E = gy = g1 = g2 = 0.0
        for a1, a2, area in self._pts:
            px = x0 + a1 * c1 + a2 * c2
            pen = -(y + a1 * s1 + a2 * s2)
            if flat:
                hp = 0.0
            else:
                h, hp = self._terrain1(px)
                pen += h
            if pen <= 0.0:
                continue
            if rigid:
                e, f, _ = _penalty1(K, d, pen)
                E += e
            else:
                f = k * area * pen**n
                E += f * pen / (n + 1)
            gy -= f
            # d(pen)/dpsi = hp * dpx/dpsi - dpy/dpsi
            g1 += f * a1 * (-hp * s1 - c1)
            g2 += f * a2 * (-hp * s2 - c2)
        if self.dim == 2:
            return E, (gy, g1 + g2)
        return E, (gy, g1, g2)

    def _sole_hessian(self, q):
        """Analytic Hessian of the segmented-sole contact energy."""
        sub = self.substrate
        y, x0 = q[0], self.foot_x
        c1, s1 = math.cos(q[1]), math.sin(q[1])
        if self.dim > 2:
            c2, s2 = math.cos(q[2]), math.sin(q[2])
        else:
            c2, s2 = c1, s1
        flat = sub.heightfield is None
        rigid = sub.rigid
        if rigid:
            K, d = sub.penalty, PENALTY_ONSET
        else:
            k, n = sub.sinkage_k, sub.sinkage_n
        H = [[0.0] * 3 for _ in range(3)]
        for a1, a2, area in self._pts:
            px = x0 + a1 * c1 + a2 * c2
            pen = -(y + a1 * s1 + a2 * s2)
            if flat:
                hp = hpp = 0.0
            else:
                h, hp, hpp = self._terrain2(px)
                pen += h
            if pen <= 0.0:
                continue
            if rigid:
                _, f, kk = _penalty1(K, d, pen)
            else:
                f = k * area * pen**n
                kk = n * f / pen
            dx1, dx2 = -a1 * s1, -a2 * s2
            grad = (-1.0, hp * dx1 - a1 * c1, hp * dx2 - a2 * c2)
            # second derivatives of pen: px'' = -a c, py'' = -a s
            sec = (
                (0.0, 0.0, 0.0),
                (0.0, hpp * dx1 * dx1 - hp * a1 * c1 + a1 * s1, hpp * dx1 * dx2),
                (0.0, hpp * dx1 * dx2, hpp * dx2 * dx2 - hp * a2 * c2 + a2 * s2),
            )
            for i in range(3):
                for j in range(3):
                    H[i][j] += kk * grad[i] * grad[j] + f * sec[i][j]
        H = np.array(H)
        if self.dim == 2:
            # psi2 follows psi1 on a one-segment foot
            T = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
            return T.T @ H @ T
        return H

    def _terrain2(self, x):
        """Height, slope and curvature of the solver surface at ``x``."""
        lo, hi = self._xrange
        if x < lo or x > hi:
            return surface_height(self.substrate, x), surface_slope(self.substrate, x), 0.0
        mids = self._mids_l
        if self._inv_dx:
            j = int((x - mids[0]) * self._inv_dx // 1.0)
        else:
            j = bisect.bisect_right(mids, x) - 1
        j = min(max(j, 0), len(mids) - 2)
        w = x - mids[j]
        L = mids[j + 1] - mids[j]
        a = self._slopes_l[j]
        b = self._slopes_l[j + 1]
        if w > L:
            return self._hmid_l[j + 1] + b * (w - L), b, 0.0
        if w < 0.0:
            return self._hmid_l[j] + a * w, a, 0.0
        blend = (b - a) / L
        return self._hmid_l[j] + a * w + 0.5 * blend * w * w, a + blend * w, blend

    def hessian(self, q, steps=None):
        """Hessian of the potential: FD on the leg gradient, analytic contact part.

        Round feet return None; their one-coordinate problem is cheap to
        difference as a whole.
        """
        if self.round_foot:
            return None
        if steps is None:
            steps = 1e-9 * self.scale
        n = self.dim
        H = np.empty((n, n))
        g0 = None
        for j in range(n):
            e = np.zeros(n)
            e[j] = steps[j]
            gp = self._leg_energy(q + e)[1]
            gm = self._leg_energy(q - e)[1]
            if gp is not None and gm is not None:
                H[:, j] = (np.array(gp) - np.array(gm)) / (2.0 * steps[j])
            else:
                if g0 is None:
                    g0 = np.array(self._leg_energy(q)[1])
                if gp is not None:
                    H[:, j] = (np.array(gp) - g0) / steps[j]
                elif gm is not None:
                    H[:, j] = (g0 - np.array(gm)) / steps[j]
                else:
                    H[:, j] = 0.0
        return 0.5 * (H + H.T) + self._sole_hessian(q)

    # -- public ------------------------------------------------------
    def energy(self, q) -> float:
        return self.energy_and_gradient(q)[0]

    def gradient(self, q) -> np.ndarray:
        return self.energy_and_gradient(q)[1]

    def energy_and_gradient(self, q):
        El, gl, _ = self._leg_energy(q)
        if not math.isfinite(El):
            return math.inf, None
        if self.round_foot:
            Ec, gc, _ = self._contact(q)
        else:
            Ec, gc = self._sole_fast(q)
        return El + Ec, np.array([a + b for a, b in zip(gl, gc)])

    def touchdown_q(self, y):
        """Start vector with j3 at height ``y`` and the toes draped over the terrain."""
        q = np.empty(self.dim)
        q[0] = y
        q[1:] = math.pi
        if self.dim > 1 and self.substrate.heightfield is not None:
            foot = self.config.foot
            l1 = foot.segment_lengths[0]
            s1 = self._s1[self._s2 == 0.0]
            q[1] = self._drape(self.foot_x, y, s1[s1 > 0])
            if self.dim > 2:
                x4 = self.foot_x + l1 * math.cos(q[1])
                y4 = y + l1 * math.sin(q[1])
                q[2] = self._drape(x4, y4, self._s2[self._s2 > 0])
            else:
                q[1:] = q[1]
        return q

    def _drape(self, x0, y0, distances):
        """Direction of a toe from (x0, y0) lifted just enough to clear the terrain."""
        for lift in np.radians(np.arange(0.0, 80.0, 0.25)):
            psi = math.pi - lift
            xs = x0 + distances * math.cos(psi)
            ys = y0 + distances * math.sin(psi)
            if np.all(ys >= surface_height(self.substrate, xs)):
                return psi
        return math.pi - math.radians(80.0)


def contact_candidates(foot, pose, substrate: Substrate) -> ContactSet:
    """Candidate contact points of ``foot`` in ``pose``, without forces.

    Segmented soles are sampled uniformly from j3 to the toe tip.  A round
    foot is a free-rolling cam centred on j3, so its only candidate is the
    lowest point of the circle wherever the leg has turned it.
    """
    j3 = np.asarray(pose.j3, float)
    if foot.segmented:
        s = np.linspace(0.0, foot.sole_length, foot.contact_sample_count)
        l1 = foot.segment_lengths[0]
        j4 = np.asarray(pose.j4, float)
        tip = np.asarray(pose.tip, float)
        pts = []
        for si in s:
            if si <= l1 + 1e-15:
                pts.append(j3 + (j4 - j3) * (si / l1))
            else:
                pts.append(j4 + (tip - j4) * ((si - l1) / foot.segment_lengths[1]))
        pts = np.array(pts)
        area = np.full(len(s), foot.projected_area / len(s))
    else:
        pts = np.array([[j3[0], j3[1] - foot.radius]])
        area = np.zeros(1)
    h = np.asarray(surface_height(substrate, pts[:, 0]), float)
    pen = h - pts[:, 1]
    zero = np.zeros(len(pts))
    return ContactSet(
        positions=pts,
        engaged=pen >= 0,
        penetration=pen,
        normal=zero,
        vertical=zero.copy(),
        tangential=zero.copy(),
        area=area,
        depth=np.maximum(pen, 0.0),
        foot_x=float(j3[0]),
    )


def potential_energy(problem: EquilibriumProblem, q) -> float:
    return problem.energy(np.asarray(q, dtype=float))


def potential_gradient(problem: EquilibriumProblem, q) -> np.ndarray:
    return problem.gradient(np.asarray(q, dtype=float))


# -- minimiser -----------------------------------------------------------

def _fd_hessian(fg, q, g0, steps):
    """Central differences of the analytic gradient; one-sided where infeasible."""
    n = len(q)
    H = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = steps[j]
        gp = fg(q + e)[1]
        gm = fg(q - e)[1]
        if gp is not None and gm is not None:
            H[:, j] = (gp - gm) / (2.0 * steps[j])
        elif gp is not None:
            H[:, j] = (gp - g0) / steps[j]
        elif gm is not None:
            H[:, j] = (g0 - gm) / steps[j]
        else:
            H[:, j] = 0.0
    return 0.5 * (H + H.T)


def _spd_solve(A, b, shift=0.0):
    """Solve ``(A + shift I) x = b`` by Cholesky; None unless positive definite.

    Plain Python: the systems here are at most 3x3, where numpy's call
    overhead dominates.
    """
    n = len(b)
    L = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            acc = A[i][j] + (shift if i == j else 0.0)
            for k in range(j):
                acc -= L[i][k] * L[j][k]
            if i == j:
                if not acc > 0.0:
                    return None
                L[i][i] = math.sqrt(acc)
            else:
                L[i][j] = acc / L[j][j]
    z = [0.0] * n
    for i in range(n):
        acc = b[i]
        for k in range(i):
            acc -= L[i][k] * z[k]
        z[i] = acc / L[i][i]
    x = [0.0] * n
    for i in reversed(range(n)):
        acc = z[i]
        for k in range(i + 1, n):
            acc -= L[k][i] * x[k]
        x[i] = acc / L[i][i]
    return x


def _bfgs(H, sk, yk):
    sy = float(np.dot(sk, yk))
    if sy <= 1e-12 * float(np.linalg.norm(sk) * np.linalg.norm(yk)):
        return H
    Hsk = H @ sk
    sHs = float(np.dot(sk, Hsk))
    if sHs <= 0:
        return H
    return H + np.outer(yk, yk) / sy - np.outer(Hsk, Hsk) / sHs


def damped_newton(fg, q0, scale, tol=GRAD_TOL, max_iter=MAX_ITER, workspace=None, hess=None):
    """Minimise with Newton steps on an FD Hessian of the analytic gradient.

    Indefinite Hessians are shifted towards the scaled gradient-descent
    direction.  A ``workspace`` dict carries the last Hessian between calls
    (continuation along the hip track); it is reused while it keeps cutting
    the residual tenfold per step.  Returns ``(q, f, g, iterations)``;
    raises SolverFailure.
    """
    q = np.array(q0, dtype=float)
    f, g = fg(q)
    if not math.isfinite(f):
        raise SolverFailure("infeasible starting point", math.inf)
    # small stencil: unilateral springs make the curvature jump at slack
    steps = 1e-9 * scale
    S2 = scale * scale
    H = None
    if workspace is not None:
        H = workspace.get("H")
        if H is not None and H.shape != (len(q), len(q)):
            H = None
    fresh = False
    res_prev = math.inf
    for it in range(max_iter):
        res = float(np.max(np.abs(g * scale)))
        if res <= tol:
            if workspace is not None and H is not None:
                workspace["H"] = H
            return q, f, g, it
        if H is None or not fresh and res > 0.1 * res_prev:
            H = hess(q) if hess is not None else None
            if H is None:
                H = _fd_hessian(fg, q, g, steps)
            fresh = True
        else:
            fresh = False
        res_prev = res
        # work in scaled coordinates so the shift is well conditioned
        Hs = H * np.outer(scale, scale)
        gs = g * scale
        Hl, gl = Hs.tolist(), gs.tolist()
        shift = 0.0
        for _ in range(30):
            x = _spd_solve(Hl, gl, shift)
            if x is not None:
                break
            shift = max(2.0 * shift, 1e-10 * max(1.0, float(np.max(np.abs(np.diag(Hs))))))
        if x is None:
            p = -g * S2
        else:
            p = -scale * np.array(x)
        if float(np.dot(g, p)) >= 0:
            p = -g * S2
        # flat directions (a slack, lifted toe) would otherwise ask for huge steps
        reach = float(np.max(np.abs(p / scale)))
        if reach > MAX_STEP:
            p *= MAX_STEP / reach
        slope = float(np.dot(g, p))
        t = 1.0
        gnorm = np.linalg.norm(g * scale)
        accepted = False
        noise = 1e-13 * max(1.0, abs(f))
        while t > 1e-14:
            qn = q + t * p
            fn, gn = fg(qn)
            if math.isfinite(fn) and gn is not None:
                if fn <= f + 1e-4 * t * slope + noise or (
                    fn <= f + noise and np.linalg.norm(gn * scale) < gnorm
                ):
                    accepted = True
                    break
                # minimiser of the quadratic through f, slope and fn
                curv = fn - f - slope * t
                t_q = -slope * t * t / (2.0 * curv) if curv > 0 else 0.5 * t
                t = min(max(t_q, 0.02 * t), 0.5 * t)
            else:
                t *= 0.5
        if not accepted:
            if not fresh:
                H = None  # stale curvature; retry with a fresh one
                continue
            raise SolverFailure("line search stalled", res)
        if not fresh:
            # BFGS secant update keeps a reused Hessian honest
            H = _bfgs(H, qn - q, gn - g)
        q, f, g = qn, fn, gn
    res = float(np.max(np.abs(g * scale)))
    if res <= tol:
        return q, f, g, max_iter
    raise SolverFailure(f"no convergence after {max_iter} iterations", res)


def solve_equilibrium(problem: EquilibriumProblem, q_init, workspace=None) -> EquilibriumState:
    q, f, g, iters = damped_newton(
        problem.energy_and_gradient, q_init, problem.scale, workspace=workspace, hess=problem.hessian
    )
    return equilibrium_state(problem, q, iters=iters, energy=f)


def equilibrium_state(problem: EquilibriumProblem, q, iters=0, energy=None) -> EquilibriumState:
    """Forces, contacts and CoP for a (converged) coordinate vector."""
    q = np.asarray(q, dtype=float)
    _, gl, dVdx = problem._leg_energy(q)
    _, gc, (px, py, pen, f, hp) = problem._contact(q)
    g = np.asarray(gl) + gc
    engaged = pen >= 0
    vertical = np.where(engaged, f, 0.0)
    normal = vertical * np.sqrt(1.0 + hp * hp)
    F_v = float(vertical.sum())
    flight = not bool(np.any(vertical > 0))
    # the horizontal hold at j3 is friction; without load it carries nothing
    F_h = 0.0 if flight else float(dVdx)
    if F_v > 0:
        # horizontal demand shared in proportion to the load each point carries
        tangential = F_h * vertical / F_v
    else:
        tangential = np.zeros_like(vertical)
    foot = problem.config.foot
    if problem.round_foot:
        area = np.array([bearing_area(foot, float(max(pen[0], 0.0)))])
        depth = np.where(engaged, pen + problem.excavation, 0.0)
    else:
        area = problem._area.copy()
        depth = np.where(engaged, pen, 0.0)
    contacts = ContactSet(
        positions=np.column_stack([px, py]),
        engaged=engaged,
        penetration=pen,
        normal=normal,
        vertical=vertical,
        tangential=tangential,
        area=np.where(engaged, area, 0.0),
        depth=depth,
        foot_x=problem.foot_x,
    )
    cop = math.nan if flight else center_of_pressure(contacts)
    state = problem.joint_state(q)
    tendon = _tendon(problem, state)
    sink = float(depth.max()) if np.any(engaged) else 0.0
    return EquilibriumState(
        state=state,
        tendon=tendon,
        contacts=contacts,
        F_h=F_h,
        F_v=F_v,
        cop_x=cop,
        sink=sink,
        residual=float(np.max(np.abs(g * problem.scale))),
        q=q,
        flight=flight,
        iterations=iters,
        energy=problem.energy(q) if energy is None else energy,
    )


def _tendon(problem, state):
    from .tendon import tendon_state

    return tendon_state(problem.config, state, problem.rest)


def center_of_pressure(contacts: ContactSet) -> float:
    """Normal-force weighted mean of the foot-frame contact coordinates."""
    w = np.where(contacts.engaged, contacts.vertical, 0.0)
    total = float(w.sum())
    if not total > 0:
        raise NoContactError("no engaged contact carries load")
    return float(np.dot(contacts.local_x, w) / total)


def sliding_margin(eq: EquilibriumState, substrate: Substrate) -> float:
    """Summed tangential capacity minus ``|F_h|``; negative means the foot slides."""
    if eq.flight:
        return 0.0
    c = eq.contacts
    capacity = sum(
        tangential_capacity(substrate, float(N), float(A))
        for N, A, on in zip(c.normal, c.area, c.engaged)
        if on
    )
    return capacity - abs(float(c.tangential.sum()))
