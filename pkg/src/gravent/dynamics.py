"""Classical paths, the expanded two-body Lagrangian and its action.

Conventions
-----------
Each particle moves along the line joining the two centres of mass.  The
coordinate q_a of particle a is measured in units of alpha from its own
centre, positive *away* from the other particle, so the separation is
d + alpha (q_A + q_B).  With this choice the expanded Newtonian coupling
phi / (1 + epsilon s), s = q_A + q_B, reads

    phi (1 - epsilon s + epsilon^2 s^2) + O(epsilon^3),

so the linear term enters with a negative sign.  Time is measured
in units of 1/omega and the Lagrangian in units of hbar omega, so
``action_phase`` returns S/hbar directly.

Lagrangian terms kept at second order in Omega (flags ``ret``, ``kin``)::

    L_free  = (qA'^2 + qB'^2)/2 + Omega^2 eps^2 (qA'^4 + qB'^4)/8 - 2/(Omega^2 eps^2)
    L_grav  = phi (eps^2 s^2 - eps s + 1)
    L_kin   = kin Omega^2 eps^2 phi (-4 qA' qB' + 3/2 qA'^2 + 3/2 qB'^2)
    L_ret   = ret^2 Omega^2 eps phi ((qA'' + qB'')/2 - 2 eps qA' qB' + eps qA'^2 + eps qB'^2)
            + ret   Omega^2 eps phi (-(qA'' + qB'')/4 + eps qA' qB' - eps qA'^2/2 - eps qB'^2/2)

At zeroth order in Omega only L_free (without the Omega terms) and L_grav
remain.  Trajectory corrections from the Omega terms vanish at this order,
so classical paths are always solved with the Newtonian equations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .params import DimensionlessGroups

__all__ = [
    "Trajectory",
    "LagrangianConfig",
    "ActionPhase",
    "KeplerSolveError",
    "RetardedTimeError",
    "straight_line",
    "solve_kepler_bvp",
    "retarded_time",
    "action_phase",
    "newtonian_coupling",
]

GL_NODES = 32


class KeplerSolveError(ArithmeticError):
    pass


class RetardedTimeError(ArithmeticError):
    pass


def _swing(kappa, tau):
    """sinh(kappa tau)/kappa, -> tau as kappa -> 0."""
    if kappa == 0:
        return tau * 1.0
    return np.sinh(kappa * tau) / kappa


def _bend(kappa, tau):
    """(cosh(kappa tau) - 1)/kappa^2, -> tau^2/2 as kappa -> 0."""
    if kappa == 0:
        return tau * tau / 2
    h = np.sinh(kappa * tau / 2) / kappa
    return 2 * h * h


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Classical path of one particle between two pinned endpoints.

    The path is q(t) = c0 + c1 tau + c2 (cosh(k tau) - 1)/k^2 + c3 sinh(k tau)/k
    with tau = t - t_initial and k = ``kappa``.  Coefficients may be arrays
    (one path per element) and may be complex, which lets the propagator
    evaluate actions at complex quadrature nodes.
    """

    y_initial: object
    y_final: object
    t_initial: float
    t_final: float
    kind: str
    coefficients: tuple
    kappa: float = 0.0

    @property
    def duration(self) -> float:
        return self.t_final - self.t_initial

    @property
    def mean_velocity(self):
        return (self.y_final - self.y_initial) / self.duration

    def q(self, t):
        tau = t - self.t_initial
        if self.kind == "straight_line":
            lam = tau / self.duration
            return (1 - lam) * self.y_initial + lam * self.y_final
        c0, c1, c2, c3 = self.coefficients
        return c0 + c1 * tau + c2 * _bend(self.kappa, tau) + c3 * _swing(self.kappa, tau)

    def qdot(self, t):
        tau = t - self.t_initial
        c0, c1, c2, c3 = self.coefficients
        if self.kind == "straight_line":
            return c1 + 0 * tau
        return c1 + c2 * _swing(self.kappa, tau) + c3 * np.cosh(self.kappa * tau)

    def qddot(self, t):
        tau = t - self.t_initial
        c0, c1, c2, c3 = self.coefficients
        if self.kind == "straight_line":
            return 0 * c1 + 0 * tau
        k2 = self.kappa**2
        return c2 * np.cosh(self.kappa * tau) + c3 * k2 * _swing(self.kappa, tau)


def _check_interval(t_i, t_f):
    if not (math.isfinite(t_i) and math.isfinite(t_f)):
        raise ValueError("trajectory times must be finite")
    if not t_f > t_i:
        raise ValueError(f"zero or negative duration: t_initial={t_i}, t_final={t_f}")


def straight_line(y_i, y_f, t_i: float, t_f: float) -> Trajectory:
    """Constant-velocity path from ``y_i`` at ``t_i`` to ``y_f`` at ``t_f``."""
    _check_interval(t_i, t_f)
    slope = (y_f - y_i) / (t_f - t_i)
    zero = 0 * slope
    return Trajectory(y_i, y_f, t_i, t_f, "straight_line", (y_i, slope, zero, zero))


def solve_kepler_bvp(yA_i, yA_f, yB_i, yB_f, t_i: float, t_f: float, groups: DimensionlessGroups):
    """Boundary-pinned classical paths of the expanded Newtonian two-body problem.

    The equations of motion qA'' = qB'' = phi (2 eps^2 s - eps) decouple into
    a free relative coordinate u = qA - qB and a centre coordinate s = qA + qB
    obeying s'' = k^2 s - 2 phi eps with k = 2 eps sqrt(phi); both are solved
    in closed form.

    Returns
    -------
    (Trajectory, Trajectory)
        Paths of A and B.
    """
    _check_interval(t_i, t_f)
    T = t_f - t_i
    phi, eps = groups.phi, groups.epsilon
    kappa = 2 * eps * math.sqrt(phi)
    force = -2 * phi * eps
    swing_T = _swing(kappa, T)
    if not abs(swing_T) > 1e-12 * T:
        raise KeplerSolveError(f"ill-conditioned boundary solve: sinh(kT)/k = {swing_T!r}")
    s_i, s_f = yA_i + yB_i, yA_f + yB_f
    curve = kappa**2 * s_i + force
    s_rate = (s_f - s_i - curve * _bend(kappa, T)) / swing_T
    u_rate = ((yA_f - yB_f) - (yA_i - yB_i)) / T
    traj_a = Trajectory(yA_i, yA_f, t_i, t_f, "kepler_bvp", (yA_i, u_rate / 2, curve / 2, s_rate / 2), kappa)
    traj_b = Trajectory(yB_i, yB_f, t_i, t_f, "kepler_bvp", (yB_i, -u_rate / 2, curve / 2, s_rate / 2), kappa)
    return traj_a, traj_b


def newtonian_coupling(s, groups: DimensionlessGroups, expanded: bool = True):
    """Gravitational Lagrangian term phi d/(d + alpha s) in units of hbar omega."""
    phi, eps = groups.phi, groups.epsilon
    if expanded:
        return phi * (1 - eps * s + eps**2 * s * s)
    return phi / (1 + eps * s)


def retarded_time(traj_a, traj_b, t, groups: DimensionlessGroups):
    """Time t_ab at which particle a is seen by particle b at time t.

    The light-cone condition c (t - t_ab) = d + alpha (q_b(t) + q_a(t_ab)) is
    expanded to second order in tau = t - t_ab about t, giving (in units of
    1/omega and after multiplying by Omega)

        (Omega eps qa''/2) tau^2 - (1 + Omega eps qa') tau + Omega (1 + eps s) = 0,

    with all derivatives at t.  The root continuous with tau = Omega at rest
    is taken, i.e. the one on the past light cone closest to t.
    """
    om, eps = groups.Omega, groups.epsilon
    qa, qa_dot, qa_ddot = traj_a.q(t), traj_a.qdot(t), traj_a.qddot(t)
    s = qa + traj_b.q(t)
    a = om * eps * qa_ddot / 2
    b = -(1 + om * eps * qa_dot)
    c = om * (1 + eps * s)
    disc = b * b - 4 * a * c
    if np.any(np.asarray(disc) < 0):
        raise RetardedTimeError("no real retarded-time root within the expansion")
    # Citardauq form of the small root, regular as a -> 0
    tau = 2 * c / (-b + np.sqrt(disc))
    if np.any(np.asarray(tau) < 0):
        raise RetardedTimeError("retarded-time root lies in the future")
    return t - tau


@dataclass(frozen=True)
class LagrangianConfig:
    """Which pieces of the expanded Lagrangian enter the action.

    ``order_Omega=0`` is the Newtonian two-body Lagrangian whatever the
    flags say; ``order_Omega=2`` adds the relativistic kinetic terms and the
    ``kin``/``ret`` gravitational terms.
    """

    groups: DimensionlessGroups
    order_Omega: int = 0
    ret: int = 0
    kin: int = 0

    def __post_init__(self):
        if self.order_Omega not in (0, 2):
            raise ValueError(f"order_Omega must be 0 or 2, got {self.order_Omega}")
        if self.ret not in (0, 1) or self.kin not in (0, 1):
            raise ValueError("bookkeeping flags ret and kin must be 0 or 1")
        if self.order_Omega == 2 and not self.groups.Omega > 0:
            raise ValueError("order_Omega=2 needs Omega > 0")

    @property
    def relativistic(self) -> bool:
        return self.order_Omega == 2

    @property
    def ret_flag(self) -> int:
        return self.ret if self.relativistic else 0

    @property
    def kin_flag(self) -> int:
        return self.kin if self.relativistic else 0


@dataclass(frozen=True)
class ActionPhase:
    """S/hbar split by origin.

    ``kinetic_free`` is the free straight-line action sum (dy)^2/(2T);
    ``kinetic_excess`` the Newtonian kinetic action beyond it.  The
    endpoint-independent pieces (``rest_energy``, ``static_potential``)
    are contained in the kinetic/gravitational parts but also exposed via
    ``constant_part`` so callers can drop global phases.
    """

    kinetic_free: object
    kinetic_excess: object
    kinetic_relativistic: object
    rest_energy: float
    static_potential: float
    gravitational_varying: object
    retardation_part: object
    kinetic_gravitating_part: object

    @property
    def kinetic_part(self):
        return self.kinetic_free + self.kinetic_excess + self.kinetic_relativistic + self.rest_energy

    @property
    def gravitational_part(self):
        return self.static_potential + self.gravitational_varying

    @property
    def constant_part(self) -> float:
        return self.rest_energy + self.static_potential

    @property
    def total(self):
        return (
            self.kinetic_part
            + self.gravitational_part
            + self.retardation_part
            + self.kinetic_gravitating_part
        )

    @property
    def interaction(self):
        """Endpoint-dependent phase beyond free straight-line motion."""
        return (
            self.kinetic_excess
            + self.kinetic_relativistic
            + self.gravitational_varying
            + self.retardation_part
            + self.kinetic_gravitating_part
        )


@lru_cache(maxsize=64)
def _gauss_legendre(n, t_i, t_f):
    x, w = np.polynomial.legendre.leggauss(n)
    half = (t_f - t_i) / 2
    return t_i + half * (x + 1), half * w


def _constants(config, T):
    g = config.groups
    rest = -2 * T / (g.Omega**2 * g.epsilon**2) if config.relativistic else 0.0
    return rest, g.phi * T


def _straight_action(ta, tb, config):
    g = config.groups
    phi, eps, om = g.phi, g.epsilon, g.Omega
    T = ta.duration
    va, vb = ta.mean_velocity, tb.mean_velocity
    s_i = ta.y_initial + tb.y_initial
    s_f = ta.y_final + tb.y_final
    free = T * (va * va + vb * vb) / 2
    varying = phi * T * (-eps * (s_i + s_f) / 2 + eps**2 * (s_i * s_i + s_i * s_f + s_f * s_f) / 3)
    zero = 0 * free
    rel = kin = ret = zero
    if config.relativistic:
        rel = T * om**2 * eps**2 * (va**4 + vb**4) / 8
        kin = config.kin_flag * T * om**2 * eps**2 * phi * (-4 * va * vb + 1.5 * va * va + 1.5 * vb * vb)
        r = config.ret_flag
        quad = va * va + vb * vb
        ret = T * om**2 * eps**2 * phi * (
            r * r * (-2 * va * vb + quad) + r * (va * vb - quad / 2)
        )
    rest, static = _constants(config, T)
    return ActionPhase(free, zero, rel, rest, static, varying, ret, kin)


def _quadratic_form(gram, x):
    out = 0
    for m in range(len(x)):
        for n in range(len(x)):
            if gram[m, n] != 0:
                out = out + gram[m, n] * x[m] * x[n]
    return out


def _gram_action(ta, tb, config, nodes):
    """Newtonian action of closed-form paths via Gauss-Legendre Gram matrices."""
    g = config.groups
    kappa = ta.kappa if ta.kind == "kepler_bvp" else tb.kappa
    T = ta.duration
    tau, w = _gauss_legendre(nodes, 0.0, T)
    basis = np.array([np.ones_like(tau), tau, _bend(kappa, tau), _swing(kappa, tau)])
    dbasis = np.array([np.ones_like(tau), _swing(kappa, tau), np.cosh(kappa * tau)])
    gram = (basis * w) @ basis.T
    dgram = (dbasis * w) @ dbasis.T
    mom = basis @ w
    cs = [a + b for a, b in zip(ta.coefficients, tb.coefficients)]
    lin = sum(mom[m] * cs[m] for m in range(4))
    sq = _quadratic_form(gram, cs)
    varying = g.phi * (-g.epsilon * lin + g.epsilon**2 * sq)
    excess = 0
    free = 0
    for tr in (ta, tb):
        v = tr.mean_velocity
        c0, c1, c2, c3 = tr.coefficients
        excess = excess + _quadratic_form(dgram, [c1 - v, c2, c3]) / 2
        free = free + T * v * v / 2
    zero = 0 * free
    rest, static = _constants(config, T)
    return ActionPhase(free, excess, zero, rest, static, varying, zero, zero)


def _pointwise_action(ta, tb, config, nodes):
    g = config.groups
    phi, eps, om = g.phi, g.epsilon, g.Omega
    T = ta.t_final - ta.t_initial
    ts, ws = _gauss_legendre(nodes, ta.t_initial, ta.t_final)
    va = (ta.y_final - ta.y_initial) / T
    vb = (tb.y_final - tb.y_initial) / T
    excess = varying = rel = kin = ret = 0
    r, k = config.ret_flag, config.kin_flag
    for t, w in zip(ts, ws):
        qa, qb = ta.q(t), tb.q(t)
        da, db = ta.qdot(t), tb.qdot(t)
        s = qa + qb
        excess = excess + w * ((da - va) ** 2 + (db - vb) ** 2) / 2
        varying = varying + w * phi * (-eps * s + eps**2 * s * s)
        if config.relativistic:
            acc = ta.qddot(t) + tb.qddot(t)
            quad = da * da + db * db
            rel = rel + w * om**2 * eps**2 * (da**4 + db**4) / 8
            kin = kin + w * k * om**2 * eps**2 * phi * (-4 * da * db + 1.5 * quad)
            ret = ret + w * om**2 * eps * phi * (
                r * r * (acc / 2 + eps * (-2 * da * db + quad))
                + r * (-acc / 4 + eps * (da * db - quad / 2))
            )
    free = T * (va * va + vb * vb) / 2
    zero = 0 * free
    rest, static = _constants(config, T)
    return ActionPhase(free, excess, rel + zero, rest, static, varying, ret + zero, kin + zero)


def action_phase(traj_a, traj_b, config: LagrangianConfig, nodes: int = GL_NODES) -> ActionPhase:
    """S/hbar of a pair of paths under the expanded Lagrangian.

    Straight lines are integrated exactly (polynomial integrands).  Any other
    path uses ``nodes``-point Gauss-Legendre quadrature; for closed-form
    paths and the Newtonian Lagrangian the quadrature is assembled once as
    Gram matrices of the basis functions, otherwise the Lagrangian is sampled
    node by node.  Any object with ``q``, ``qdot``, ``qddot``, ``t_initial``,
    ``t_final``, ``y_initial``, ``y_final`` and ``kind`` is accepted.
    """
    if traj_a.t_initial != traj_b.t_initial or traj_a.t_final != traj_b.t_final:
        raise ValueError(
            "mismatched intervals: "
            f"[{traj_a.t_initial}, {traj_a.t_final}] vs [{traj_b.t_initial}, {traj_b.t_final}]"
        )
    kinds = {traj_a.kind, traj_b.kind}
    if kinds == {"straight_line"}:
        return _straight_action(traj_a, traj_b, config)
    closed = kinds <= {"straight_line", "kepler_bvp"} and all(
        isinstance(t, Trajectory) for t in (traj_a, traj_b)
    )
    if closed and not config.relativistic:
        kap = {t.kappa for t in (traj_a, traj_b) if t.kind == "kepler_bvp"}
        if len(kap) == 1:
            return _gram_action(traj_a, traj_b, config, nodes)
    return _pointwise_action(traj_a, traj_b, config, nodes)
