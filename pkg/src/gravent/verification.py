"""Acceptance checks shared by ``gravent verify`` and the test-suite.

Each ``criterion_N`` returns a :class:`CriterionResult` with the measured
quantities and the tolerances they were held to.  Simulated states are
cached on the :class:`Verifier` so that the evaluator cross-check can
revisit every state produced by the simulation criteria.
"""
from __future__ import annotations

import filecmp
import math
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .closed_form import (
    entanglement_oscillator_large_omegaT,
    entanglement_oscillator_limit,
    entanglement_path_limit,
    entanglement_unified,
    f0,
    f2,
    f4,
    relativistic_correction,
)
from .config import Numerics, RunConfig, SweepAxis
from .dynamics import LagrangianConfig, retarded_time, solve_kepler_bvp, straight_line
from .entanglement import Axis, BipartiteWavefunction, fidelity, marginals, measure_quadrature, measure_schmidt, normalize
from .params import DimensionlessGroups, RegimeWarning
from .propagator import (
    EvolutionSpec,
    OneParticleState,
    default_final_axis,
    evolve_split_step,
    evolve_stationary_phase,
    initial_state,
    split_step_axis,
)
from .runs import run_simulate, run_sweep

__all__ = ["CriterionResult", "Verifier", "CRITERIA"]

REFERENCE = dict(phi=1e-3, epsilon=0.02)
XIS = (0.0, 1.0, 5.0)
OMEGATS = (0.5, 1.0, 2.0)
FINAL_POINTS = 96
NODES = 64
SPLIT_STEPS = 100


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        return f"[{tag}] criterion {self.number}: {self.name} ({parts})"

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "tolerance": self.tolerance,
        }


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _gaussian(y, c):
    return np.exp(-((y - c) ** 2) / 2)


class Verifier:
    """Runs the acceptance criteria, caching simulated states between them."""

    def __init__(self, final_points: int = FINAL_POINTS, nodes: int = NODES):
        self.final_points = final_points
        self.nodes = nodes
        self.states = {}

    # shared simulation -------------------------------------------------

    def simulate(self, phi, epsilon, xi, omegaT, kind="straight_line"):
        key = ("sp", phi, epsilon, xi, omegaT, kind)
        if key not in self.states:
            g = DimensionlessGroups(phi, epsilon, xi, 0.0, omegaT)
            final = default_final_axis(xi, omegaT, self.final_points)
            start = Axis.symmetric(xi / 2 + 9, self.final_points)
            spec1 = OneParticleState.two_gaussians(xi, start)
            psi2 = initial_state(spec1, spec1)
            spec = EvolutionSpec(omegaT, LagrangianConfig(g), kind, self.nodes, final, final)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RegimeWarning)
                self.states[key] = evolve_stationary_phase(psi2, spec)
        return self.states[key]

    def entanglement(self, *args, **kw) -> float:
        return measure_schmidt(self.simulate(*args, **kw)).value

    # criteria ------------------------------------------------------------

    def criterion_1(self) -> CriterionResult:
        at0 = max(abs(f(0.0) - 1) for f in (f0, f2, f4))
        at50 = max(abs(f(50.0) - 1) for f in (f0, f2, f4))
        e = math.e
        at2 = abs(f4(2.0) - (e - 1) ** 2 / (e + 1) ** 2)
        ok = at0 <= 1e-12 and at50 <= 1e-6 and at2 <= 1e-12
        return CriterionResult(
            1, "f-function anchors", ok,
            {"max|f(0)-1|": at0, "max|f(50)-1|": at50, "|f4(2)-oracle|": at2},
            {"f(0)": 1e-12, "f(50)": 1e-6, "f4(2)": 1e-12},
        )

    def criterion_2(self) -> CriterionResult:
        g = DimensionlessGroups(1e-3, 1e-3, 30.0, 0.0, 0.1)
        path = abs(entanglement_unified(g).value / entanglement_path_limit(g).value - 1)
        osc = 0.0
        for wt in OMEGATS:
            g = DimensionlessGroups(1e-3, 1e-3, 0.05, 0.0, wt)
            osc = max(osc, abs(entanglement_unified(g).value / entanglement_oscillator_limit(g).value - 1))
        g = DimensionlessGroups(1e-3, 1e-3, 0.0, 0.0, 30.0)
        large = abs(entanglement_oscillator_limit(g).value / entanglement_oscillator_large_omegaT(g).value - 1)
        ok = path < 5e-3 and osc < 5e-3 and large < 1e-2
        return CriterionResult(
            2, "limit consistency", ok,
            {"unified/path-1": path, "max unified/osc-1": osc, "osc/large-1": large},
            {"path": 5e-3, "osc": 5e-3, "large": 1e-2},
        )

    def criterion_3(self) -> CriterionResult:
        worst_rel, worst_ratio = 0.0, math.inf
        for xi in XIS:
            for wt in OMEGATS:
                e1 = self.entanglement(REFERENCE["phi"], 0.02, xi, wt)
                e2 = self.entanglement(REFERENCE["phi"], 0.01, xi, wt)
                c1 = entanglement_unified(DimensionlessGroups(REFERENCE["phi"], 0.02, xi, 0.0, wt)).value
                c2 = entanglement_unified(DimensionlessGroups(REFERENCE["phi"], 0.01, xi, 0.0, wt)).value
                worst_rel = max(worst_rel, abs(e1 / c1 - 1))
                d1, d2 = abs(e1 - c1), abs(e2 - c2)
                worst_ratio = min(worst_ratio, d1 / d2 if d2 > 0 else math.inf)
        ok = worst_rel < 0.02 and worst_ratio >= 4
        return CriterionResult(
            3, "stationary phase vs closed form", ok,
            {"max rel. error": worst_rel, "min discrepancy shrink": worst_ratio},
            {"rel. error": 0.02, "shrink": 4.0},
        )

    def criterion_4(self) -> CriterionResult:
        phi, eps, xi, wt = REFERENCE["phi"], REFERENCE["epsilon"], 0.0, 1.0
        g = DimensionlessGroups(phi, eps, xi, 0.0, wt)
        box = split_step_axis(xi, wt)
        spec1 = OneParticleState.two_gaussians(xi, box)
        psi2 = initial_state(spec1, spec1)
        ss, raw = evolve_split_step(psi2, "expanded_second_order", SPLIT_STEPS, wt, g, return_raw_norm=True)
        spec = EvolutionSpec(wt, LagrangianConfig(g), "straight_line", self.nodes, box, box)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            sp = evolve_stationary_phase(psi2, spec)
        self.states[("ss", phi, eps, xi, wt)] = ss
        self.states[("sp-box", phi, eps, xi, wt)] = sp
        fid = fidelity(ss, sp)
        e_ss, e_sp = measure_schmidt(ss).value, measure_schmidt(sp).value
        rel = abs(e_ss - e_sp) / e_sp
        ok = fid >= 0.999 and rel <= 0.01 and abs(raw - 1) <= 1e-6
        return CriterionResult(
            4, "split-step vs stationary phase", ok,
            {"fidelity": fid, "|dE|/E": rel, "|norm-1|": abs(raw - 1)},
            {"fidelity": 0.999, "|dE|/E": 0.01, "norm": 1e-6},
        )

    def criterion_5(self) -> CriterionResult:
        if not any(k[0] == "sp" for k in self.states):
            self.criterion_3()
        if not any(k[0] == "ss" for k in self.states):
            self.criterion_4()
        worst = 0.0
        for psi in self.states.values():
            worst = max(worst, abs(measure_quadrature(psi).value - measure_schmidt(psi).value))
        ax = Axis.symmetric(20.0, 161)
        y = ax.points
        bell = np.outer(_gaussian(y, -10), _gaussian(y, -10)) + np.outer(_gaussian(y, 10), _gaussian(y, 10))
        bell = normalize(BipartiteWavefunction(bell, ax, ax))
        prod = normalize(BipartiteWavefunction(np.outer(_gaussian(y, 1), _gaussian(y, -2) * np.exp(0.3j * y)), ax, ax))
        bell_err = max(abs(measure_quadrature(bell).value - 1), abs(measure_schmidt(bell).value - 1))
        prod_err = max(measure_quadrature(prod).value, measure_schmidt(prod).value)
        ok = worst < 1e-8 and bell_err < 1e-8 and prod_err < 1e-8
        return CriterionResult(
            5, "evaluator cross-check", ok,
            {"states": len(self.states), "max|Eq-Es|": worst, "|E_bell-1|": bell_err, "E_product": prod_err},
            {"|Eq-Es|": 1e-8, "bell": 1e-8, "product": 1e-8},
        )

    def criterion_6(self) -> CriterionResult:
        def delta(wt, which="general"):
            g = DimensionlessGroups(1e-3, 0.01, 0.0, 0.01, wt)
            return getattr(relativistic_correction(g), which).correction

        ratio = delta(100.0) / delta(100.0, "large_omegaT")
        root = brentq(delta, 1.0, 2.5, xtol=1e-12, rtol=1e-15)
        root_err = abs(root - math.sqrt(3))
        negative = all(delta(wt) < 0 for wt in (1.8, 3.0, 10.0, 100.0))
        positive_below = all(delta(wt) > 0 for wt in (0.1, 1.0, 1.7))
        ok = abs(ratio - 1) < 0.01 and root_err < 1e-6 and negative and positive_below
        return CriterionResult(
            6, "relativistic correction", ok,
            {"general/large-1": ratio - 1, "|root-sqrt3|": root_err, "negative above root": negative},
            {"ratio": 0.01, "root": 1e-6},
        )

    def criterion_7(self) -> CriterionResult:
        wt = 1.0
        e_line = self.entanglement(REFERENCE["phi"], REFERENCE["epsilon"], 0.0, wt)
        e_kep = self.entanglement(REFERENCE["phi"], REFERENCE["epsilon"], 0.0, wt, "kepler_bvp")
        rel = abs(e_kep / e_line - 1)
        return CriterionResult(
            7, "Kepler vs straight-line paths", rel < 1e-3, {"rel. change": rel}, {"rel. change": 1e-3}
        )

    def criterion_8(self) -> CriterionResult:
        om = 0.05
        g = DimensionlessGroups(1.0, 0.3, 0.0, om, 1.0)
        rest_a, rest_b = straight_line(0.0, 0.0, 0.0, 1.0), straight_line(0.0, 0.0, 0.0, 1.0)
        ts = np.linspace(0.2, 1.0, 5)
        static = float(np.max(np.abs(retarded_time(rest_a, rest_b, ts, g) - (ts - om))))
        errs = []
        omegas = (0.02, 0.01, 0.005)
        t = 0.8
        for om in omegas:
            g = DimensionlessGroups(1.0, 0.3, 0.0, om, 1.0)
            ta, tb = solve_kepler_bvp(-1.0, 1.5, 0.5, -1.0, 0.0, 1.0, g)
            approx = retarded_time(ta, tb, t, g)

            def cone(tau):
                return tau - om * (1 + g.epsilon * (tb.q(t) + ta.q(t - tau)))

            exact = t - brentq(cone, 0.0, 4 * om, xtol=1e-16, rtol=1e-15)
            errs.append(abs(approx - exact))
        rates = [math.log2(errs[k] / errs[k + 1]) for k in range(len(errs) - 1)]
        ok = static <= 1e-12 and min(rates) >= 2.7
        return CriterionResult(
            8, "retarded time", ok,
            {"static error": static, "errors": [float(e) for e in errs], "min exponent": min(rates)},
            {"static": 1e-12, "exponent": 2.7},
        )

    def criterion_9(self) -> CriterionResult:
        g1 = DimensionlessGroups(1e-3, 0.02, 1.0, 0.0, 1.0)
        g2 = DimensionlessGroups(2e-3, 0.02, 1.0, 0.0, 1.0)
        cf_ratio = entanglement_unified(g2).value / entanglement_unified(g1).value
        e_half = self.entanglement(5e-4, 0.02, 0.0, 1.0)
        e_full = self.entanglement(1e-3, 0.02, 0.0, 1.0)
        sim_ratio = e_full / e_half
        wt = 1.0
        free = self.simulate(0.0, 0.02, 0.0, wt)
        e_free = measure_schmidt(free).value
        pa, _ = marginals(free)
        y = free.axis_A.points
        var = float(np.sum(pa * y * y) * free.axis_A.spacing)
        width_err = abs(math.sqrt(2 * var) / math.sqrt(1 + wt**2) - 1)
        ok = abs(cf_ratio - 2) <= 1e-12 and abs(sim_ratio - 2) <= 1e-4 and e_free < 1e-9 and width_err < 1e-3
        return CriterionResult(
            9, "physics properties", ok,
            {
                "closed-form ratio-2": cf_ratio - 2,
                "simulated ratio-2": sim_ratio - 2,
                "E_free": e_free,
                "width rel. error": width_err,
            },
            {"closed form": 1e-12, "simulated": 1e-4, "E_free": 1e-9, "width": 1e-3},
        )

    def criterion_10(self) -> CriterionResult:
        base = RunConfig(
            mode="simulate",
            groups={"phi": 1e-3, "epsilon": 0.02, "xi": 1.0, "Omega": 0.0, "omegaT": 1.0},
            numerics=Numerics(final_points=24, nodes=20),
            sweep_axes=(SweepAxis("omegaT", 0.5, 1.5, 3),),
            sweep_outputs=("unified", "simulated"),
        )
        identical = True
        compared = 0
        with tempfile.TemporaryDirectory() as tmp:
            dirs = []
            for threads in (1, 2, 8):
                d = Path(tmp) / f"t{threads}"
                cfg = base.with_overrides(output=str(d), threads=threads)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RegimeWarning)
                    run_simulate(cfg)
                    run_sweep(cfg)
                dirs.append(d)
            names = sorted(p.name for p in dirs[0].iterdir())
            for d in dirs[1:]:
                for name in names:
                    compared += 1
                    identical &= filecmp.cmp(dirs[0] / name, d / name, shallow=False)
        return CriterionResult(
            10, "determinism across threads", identical,
            {"files compared": compared, "identical": identical},
            {"threads": "1, 2, 8"},
        )

    def run(self, numbers=None) -> list:
        numbers = numbers or range(1, 11)
        return [getattr(self, f"criterion_{n}")() for n in numbers]


CRITERIA = {n: getattr(Verifier, f"criterion_{n}").__name__ for n in range(1, 11)}
