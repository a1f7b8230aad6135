"""Initial states and their evolution to the entangled state psi_3.

Stationary-phase evolution
--------------------------
For each pair of final positions (y3A, y3B)

    psi3(y3) = int dy2A dy2B exp(i S(y2 -> y3)) psi2(y2A) psi2(y2B),

with S/hbar the action of boundary-pinned classical (or straight) paths.
S is split as S_free + R, where S_free = sum (y3 - y2)^2 / (2T) is the free
straight-line action.  Each Gaussian hump exp(-(y - c)^2/2) of psi2 times
exp(i S_free) is a complex Gaussian exp(-a (y - mu)^2) with a = (1 - i/T)/2;
the real integration line is deformed onto mu + t/sqrt(a), t real (valid
because the integrand is entire and decays in the swept sector), where
Gauss-Hermite nodes integrate the slowly varying factor exp(i R) to
spectral accuracy.  R is evaluated by :func:`dynamics.action_phase` on paths
with complex endpoints, which is the analytic continuation of the same
polynomial/closed-form expressions.

Split-step evolution
--------------------
Independent oracle: Strang splitting of exp(-i H T) on a periodic grid with
exact spectral kinetic steps, for the two-particle Hamiltonian
H = (pA^2 + pB^2)/2 - phi d/(d + alpha s) (or its second-order expansion).
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import erfc

from . import dynamics
from .dynamics import LagrangianConfig
from .entanglement import Axis, BipartiteWavefunction, normalize, norm
from .params import RegimeThresholds, validate_regime

__all__ = [
    "OneParticleState",
    "EvolutionSpec",
    "QuadratureError",
    "ResolutionError",
    "GridTooSmallError",
    "initial_state",
    "default_final_axis",
    "split_step_axis",
    "evolve_stationary_phase",
    "evolve_split_step",
    "remove_global_phase",
    "free_gaussian_width",
]

MASS_OUTSIDE_TOL = 1e-8


class QuadratureError(ArithmeticError):
    def __init__(self, message, point=None, change=None):
        super().__init__(message)
        self.point = point
        self.change = change


class ResolutionError(ValueError):
    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class GridTooSmallError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class OneParticleState:
    """Prepared state of one particle, in units of alpha.

    ``two_gaussians`` has humps of unit width at +-xi/2, ``single_gaussian``
    one hump at 0, ``custom`` arbitrary amplitudes on ``axis``.
    """

    kind: str
    axis: Axis
    xi: float = 0.0
    amplitudes: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("two_gaussians", "single_gaussian", "custom"):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.xi < 0:
            raise ValueError("path separation xi must be >= 0")
        if self.kind == "custom":
            if self.amplitudes is None or np.shape(self.amplitudes) != (self.axis.count,):
                raise ValueError("custom state needs one amplitude per grid point")

    @classmethod
    def two_gaussians(cls, xi, axis):
        return cls("two_gaussians", axis, xi)

    @classmethod
    def single_gaussian(cls, axis):
        return cls("single_gaussian", axis, 0.0)

    @property
    def humps(self) -> tuple:
        """Centres of the unit-width Gaussian humps, or () for custom states."""
        if self.kind == "custom":
            return ()
        if self.kind == "single_gaussian" or self.xi == 0:
            return (0.0,)
        return (self.xi / 2, -self.xi / 2)

    def sample(self, y=None) -> np.ndarray:
        if self.kind == "custom":
            return np.asarray(self.amplitudes, dtype=complex)
        y = self.axis.points if y is None else y
        return sum(np.exp(-((y - c) ** 2) / 2) for c in self.humps).astype(complex)

    def mass_outside(self) -> float:
        """Upper estimate of the probability outside the grid."""
        if self.kind == "custom":
            amp = np.abs(self.amplitudes) ** 2
            edge = amp[0] + amp[-1]
            return float(edge / max(amp.sum(), 1e-300))
        lo, hi = self.axis.origin, self.axis.end
        # |hump|^2 = exp(-(y-c)^2) has unit mass after dividing by sqrt(pi)
        return max(0.5 * erfc(hi - c) + 0.5 * erfc(c - lo) for c in self.humps)


def initial_state(spec_a: OneParticleState, spec_b: OneParticleState) -> BipartiteWavefunction:
    """Normalized product state psi2 = psi2A psi2B on the specs' grids."""
    for name, spec in (("A", spec_a), ("B", spec_b)):
        out = spec.mass_outside()
        if out > MASS_OUTSIDE_TOL:
            raise GridTooSmallError(
                f"grid of particle {name} holds too little of the packet "
                f"(mass outside {out:.2e} > {MASS_OUTSIDE_TOL:g})"
            )
    amp = np.outer(spec_a.sample(), spec_b.sample())
    psi = BipartiteWavefunction(amp, spec_a.axis, spec_b.axis, source=(spec_a, spec_b))
    return normalize(psi)


def free_gaussian_width(omegaT: float) -> float:
    """Width (in alpha) of a freely spread unit Gaussian after time omegaT."""
    return math.sqrt(1 + omegaT**2)


def default_final_axis(xi: float, omegaT: float, count: int = 96) -> Axis:
    """Symmetric grid spanning 4(1 + wT) widths beyond the outer hump."""
    return Axis.symmetric(xi / 2 + 4 * (1 + omegaT), count)


def split_step_axis(xi: float, omegaT: float, spacing: float = 0.125) -> Axis:
    """Periodic box that keeps the spread packet ~1e-12 away from its edges."""
    half = xi / 2 + 7.5 * free_gaussian_width(omegaT)
    count = 2 * int(math.ceil(half / spacing))
    return Axis(-spacing * count / 2, spacing, count)


@dataclass(frozen=True)
class EvolutionSpec:
    omegaT: float
    lagrangian: LagrangianConfig
    trajectory_kind: str = "straight_line"
    nodes: int = 64
    final_axis_A: Optional[Axis] = None
    final_axis_B: Optional[Axis] = None
    threads: int = 1
    check_convergence: bool = False
    convergence_tol: float = 1e-8

    def __post_init__(self):
        if self.trajectory_kind not in ("straight_line", "kepler_bvp"):
            raise ValueError(f"unknown trajectory kind {self.trajectory_kind!r}")
        if self.nodes < 16:
            raise ValueError(f"need at least 16 quadrature nodes, got {self.nodes}")
        if not self.omegaT > 0:
            raise ValueError("omegaT must be > 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


def _final_axes(spec, psi2):
    sa, sb = psi2.source if psi2.source is not None else (None, None)
    xi_a = sa.xi if sa is not None else 0.0
    xi_b = sb.xi if sb is not None else 0.0
    ax_a = spec.final_axis_A or default_final_axis(xi_a, spec.omegaT)
    ax_b = spec.final_axis_B or default_final_axis(xi_b, spec.omegaT)
    return ax_a, ax_b


def _check_span(axis, humps, omegaT, name):
    need = 4 * (1 + omegaT)
    slack = 1e-9 * (need + abs(axis.origin) + abs(axis.end))
    for c in humps:
        if axis.origin > c - need + slack or axis.end < c + need - slack:
            raise GridTooSmallError(
                f"final grid of particle {name} must span +-{need:.3g} around the "
                f"packet centre {c:g}; got [{axis.origin:.3g}, {axis.end:.3g}]"
            )


class _HumpKernel:
    """Free evolution of one unit hump on the deformed Gauss-Hermite contour."""

    def __init__(self, centre, y3, T, x):
        a = 0.5 - 0.5j / T
        root = np.sqrt(a)
        mu = (centre - 1j * y3 / T) / (2 * a)
        # exp(-(y-c)^2/2 + i (y3-y)^2/(2T)) = exp(-a (y-mu)^2) * prefactor
        self.prefactor = np.exp(a * mu * mu - centre**2 / 2 + 1j * y3 * y3 / (2 * T)) / root
        self.nodes = mu[:, None] + x[None, :] / root


def _paths(y2a, y2b, y3a, y3b, T, spec):
    if spec.trajectory_kind == "straight_line":
        return dynamics.straight_line(y2a, y3a, 0.0, T), dynamics.straight_line(y2b, y3b, 0.0, T)
    return dynamics.solve_kepler_bvp(y2a, y3a, y2b, y3b, 0.0, T, spec.lagrangian.groups)


def _gh_row(i, kern_a, kern_b, ya, yb, w, spec):
    """psi3 along one final-grid row (fixed y3A), summed over hump pairs."""
    T = spec.omegaT
    out = np.zeros(len(yb), dtype=complex)
    for ka in kern_a:
        y2a = ka.nodes[i][None, :, None]
        for kb in kern_b:
            y2b = kb.nodes[:, None, :]
            ta, tb = _paths(y2a, y2b, ya[i], yb[:, None, None], T, spec)
            phase = dynamics.action_phase(ta, tb, spec.lagrangian).interaction
            vals = np.exp(1j * phase)
            inner = np.sum(vals * w[None, None, :], axis=2)
            out += ka.prefactor[i] * kb.prefactor * np.sum(inner * w[None, :], axis=1)
    return out


def _gh_evolve(psi2, spec, ax_a, ax_b, nodes):
    spec_a, spec_b = psi2.source
    T = spec.omegaT
    x, w = hermgauss(nodes)
    ya, yb = ax_a.points, ax_b.points
    kern_a = [_HumpKernel(c, ya, T, x) for c in spec_a.humps]
    kern_b = [_HumpKernel(c, yb, T, x) for c in spec_b.humps]

    def row(i):
        return _gh_row(i, kern_a, kern_b, ya, yb, w, spec)

    if spec.threads == 1:
        rows = [row(i) for i in range(len(ya))]
    else:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            rows = list(pool.map(row, range(len(ya))))
    return np.array(rows)


def _riemann_evolve(psi2, spec, ax_a, ax_b):
    """Fallback for custom grid states: direct sum over the initial grid."""
    T = spec.omegaT
    y2a, y2b = psi2.axis_A.points, psi2.axis_B.points
    ya, yb = ax_a.points, ax_b.points
    amp = psi2.amplitudes

    def row(i):
        out = np.empty(len(yb), dtype=complex)
        for j in range(len(yb)):
            ta, tb = _paths(y2a[:, None], y2b[None, :], ya[i], yb[j], T, spec)
            act = dynamics.action_phase(ta, tb, spec.lagrangian)
            phase = act.kinetic_free + act.interaction
            out[j] = np.sum(np.exp(1j * phase) * amp) * psi2.cell
        return out

    if spec.threads == 1:
        return np.array([row(i) for i in range(len(ya))])
    with ThreadPoolExecutor(max_workers=spec.threads) as pool:
        return np.array(list(pool.map(row, range(len(ya)))))


def remove_global_phase(psi: BipartiteWavefunction) -> BipartiteWavefunction:
    """Rotate so the largest-magnitude amplitude is real and positive."""
    amp = psi.amplitudes
    k = int(np.argmax(np.abs(amp)))
    ref = amp.flat[k]
    if ref == 0:
        return psi
    rot = np.conj(ref) / abs(ref)
    return BipartiteWavefunction(amp * rot, psi.axis_A, psi.axis_B, psi.norm_tolerance)


def _probe_convergence(psi2, spec, ax_a, ax_b, raw):
    """Recompute a few rows with doubled nodes and compare."""
    scale = np.max(np.abs(raw))
    i_max = int(np.unravel_index(np.argmax(np.abs(raw)), raw.shape)[0])
    probes = sorted({0, i_max, len(ax_a.points) - 1, len(ax_a.points) // 4})
    spec_a, spec_b = psi2.source
    T = spec.omegaT
    x, w = hermgauss(2 * spec.nodes)
    ya, yb = ax_a.points, ax_b.points
    kern_a = [_HumpKernel(c, ya, T, x) for c in spec_a.humps]
    kern_b = [_HumpKernel(c, yb, T, x) for c in spec_b.humps]
    for i in probes:
        fine = _gh_row(i, kern_a, kern_b, ya, yb, w, spec)
        change = np.abs(fine - raw[i]) / scale
        j = int(np.argmax(change))
        if change[j] > spec.convergence_tol:
            raise QuadratureError(
                f"quadrature not converged at (y3A, y3B) = ({ya[i]:.4g}, {yb[j]:.4g}): "
                f"relative change {change[j]:.2e} on doubling to {2 * spec.nodes} nodes",
                point=(float(ya[i]), float(yb[j])),
                change=float(change[j]),
            )


def evolve_stationary_phase(
    psi2: BipartiteWavefunction,
    spec: EvolutionSpec,
    thresholds: RegimeThresholds = RegimeThresholds(),
) -> BipartiteWavefunction:
    """Evolve psi2 for a time omegaT with exp(i S) on boundary-pinned paths.

    The result is normalized on the final grid and its global phase fixed
    by :func:`remove_global_phase`; constant action terms and the
    endpoint-independent path-integral prefactor are dropped.
    """
    if abs(norm(psi2) - 1) > psi2.norm_tolerance:
        raise ValueError("psi2 must be normalized")
    groups = spec.lagrangian.groups
    report = validate_regime(groups, thresholds)
    report.emit(stacklevel=2)
    ax_a, ax_b = _final_axes(spec, psi2)
    source = psi2.source
    if source is not None and source[0].humps and source[1].humps:
        _check_span(ax_a, source[0].humps, spec.omegaT, "A")
        _check_span(ax_b, source[1].humps, spec.omegaT, "B")
        raw = _gh_evolve(psi2, spec, ax_a, ax_b, spec.nodes)
        if spec.check_convergence:
            _probe_convergence(psi2, spec, ax_a, ax_b, raw)
    else:
        raw = _riemann_evolve(psi2, spec, ax_a, ax_b)
    if not np.all(np.isfinite(raw)):
        raise QuadratureError("non-finite amplitudes in psi3")
    psi3 = normalize(BipartiteWavefunction(raw, ax_a, ax_b))
    return remove_global_phase(psi3)


def _potential(kind, yA, yB, groups):
    s = yA[:, None] + yB[None, :]
    if kind == "none":
        return np.zeros_like(s)
    if kind == "expanded_second_order":
        return -dynamics.newtonian_coupling(s, groups, expanded=True)
    if kind == "full_inverse_separation":
        if np.any(1 + groups.epsilon * s <= 0.05):
            raise ResolutionError("grid reaches the particle collision point d + alpha s = 0")
        return -dynamics.newtonian_coupling(s, groups, expanded=False)
    raise ValueError(f"unknown potential {kind!r}")


def evolve_split_step(
    psi2: BipartiteWavefunction,
    potential: str,
    steps: int,
    omegaT: float,
    groups=None,
    max_spacing: float = 0.125,
    return_raw_norm: bool = False,
):
    """Second-order split-operator evolution on the periodic grid of ``psi2``.

    ``potential`` is ``"expanded_second_order"``, ``"full_inverse_separation"``
    or ``"none"``.  Grids coarser than ``max_spacing`` (alpha/8) or boxes the
    spread packet would wrap around are refused with the required size.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if potential != "none" and groups is None:
        raise ValueError("groups are required for a non-zero potential")
    for name, ax in (("A", psi2.axis_A), ("B", psi2.axis_B)):
        if ax.spacing > max_spacing:
            width = ax.spacing * ax.count
            raise ResolutionError(
                f"grid {name} spacing {ax.spacing:.4g} exceeds {max_spacing:g}; "
                f"need at least {int(math.ceil(width / max_spacing))} points for the same box",
                required=int(math.ceil(width / max_spacing)),
            )
    if psi2.source is not None:
        for name, ax, sp in (("A", psi2.axis_A, psi2.source[0]), ("B", psi2.axis_B, psi2.source[1])):
            if sp.humps:
                need = split_step_axis(sp.xi, omegaT, ax.spacing)
                if ax.origin > need.origin + 1e-12 or ax.end < need.end - ax.spacing - 1e-12:
                    raise ResolutionError(
                        f"periodic box {name} [{ax.origin:.3g}, {ax.end:.3g}] is too small for the "
                        f"spread packet; need {need.count} points at spacing {ax.spacing:g}",
                        required=need.count,
                    )
    ya, yb = psi2.axis_A.points, psi2.axis_B.points
    ka = 2 * np.pi * np.fft.fftfreq(len(ya), d=psi2.axis_A.spacing)
    kb = 2 * np.pi * np.fft.fftfreq(len(yb), d=psi2.axis_B.spacing)
    dt = omegaT / steps
    kinetic = np.exp(-0.5j * dt * (ka[:, None] ** 2 + kb[None, :] ** 2))
    half_v = np.exp(-0.5j * dt * _potential(potential, ya, yb, groups))
    psi = psi2.amplitudes.copy()
    for _ in range(steps):
        psi = half_v * psi
        psi = np.fft.ifft2(kinetic * np.fft.fft2(psi))
        psi = half_v * psi
    out = BipartiteWavefunction(psi, psi2.axis_A, psi2.axis_B, psi2.norm_tolerance)
    raw_norm = norm(out)
    result = remove_global_phase(normalize(out))
    if return_raw_norm:
        return result, raw_norm
    return result
