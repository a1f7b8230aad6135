"""Closed-form gravity-mediated entanglement of two delocalized particles.

All expressions are coded in dimensionless form.  Starting from the
dimensional result for two particles in a superposition of two Gaussians
of width alpha separated by beta,

    E = (2 G m^2 T / hbar d) (1/d^2) [ beta^4/4 + alpha^2 beta^2 (1 + (wT)^2/4)
        + alpha^4 (f0 + f2 (wT)^2/3 + f4 (wT)^4/9) ]^(1/2),

pull alpha^4 out of the bracket (its square root gives alpha^2) and use
G m^2 T/(hbar d) = phi * wT and alpha^2/d^2 = epsilon^2, with beta = xi alpha:

    E = 2 phi wT epsilon^2 [ xi^4/4 + xi^2 (1 + (wT)^2/4)
        + f0(xi) + f2(xi) (wT)^2/3 + f4(xi) (wT)^4/9 ]^(1/2).

No alpha^4 or 1/d^3 ever appears, so SI-scale inputs cannot underflow.
:func:`entanglement_unified_dimensional` keeps the original form for
cross-checks at moderate magnitudes.

The functions f0, f2, f4 are evaluated with u = exp(-x^2/4) after dividing
numerator and denominator by exp(x^2/2).  This is an exact rewriting that
never overflows, so no separate asymptotic branch is needed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .params import DimensionlessGroups, RegimeThresholds, RegimeWarning

__all__ = [
    "ClosedFormResult",
    "RelativisticCorrection",
    "UnsupportedRegimeError",
    "FORMULAS",
    "f0",
    "f2",
    "f4",
    "f_functions",
    "entanglement_unified",
    "entanglement_unified_dimensional",
    "entanglement_path_limit",
    "entanglement_oscillator_limit",
    "entanglement_oscillator_large_omegaT",
    "relativistic_correction",
]

FORMULAS = (
    "unified",
    "path_limit",
    "oscillator_limit",
    "oscillator_large_omegaT",
    "relativistic_corrected",
)


class UnsupportedRegimeError(ValueError):
    """The requested formula is not available for these parameters."""


@dataclass(frozen=True)
class ClosedFormResult:
    value: float
    formula: str
    correction: Optional[float] = None

    def __post_init__(self):
        if self.formula not in FORMULAS:
            raise ValueError(f"unknown formula tag {self.formula!r}")


@dataclass(frozen=True)
class RelativisticCorrection:
    """Leading 1/c correction for a single Gaussian, both available forms."""

    general: ClosedFormResult
    large_omegaT: ClosedFormResult


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("f-functions are defined for x = beta/alpha >= 0")
    return x


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def f0(x):
    x = _check_x(x)
    x2 = x * x
    u = np.exp(-x2 / 4)
    num = (-x2 * x2 - 4 * x2 + 4) * u * u + 4 - 2 * u * (x2 * x2 + 2 * x2 - 4)
    return _out(num / (4 * (1 + u) ** 2))


def f2(x):
    x = _check_x(x)
    x2 = x * x
    u = np.exp(-x2 / 4)
    num = -12 * x2 * u * u + 8 + (-3 * x2 * x2 - 12 * x2 + 16) * u + 8 * u * u
    return _out(num / (8 * (1 + u) ** 2))


def f4(x):
    x = _check_x(x)
    u = np.exp(-x * x / 4)
    return _out((1 + u - x * x * u / 2) ** 2 / (1 + u) ** 2)


def f_functions(x):
    """Return ``(f0(x), f2(x), f4(x))``."""
    return f0(x), f2(x), f4(x)


def _osc_root(wt):
    return math.sqrt(1 + wt**2 / 3 + wt**4 / 9)


def entanglement_unified(groups: DimensionlessGroups) -> ClosedFormResult:
    """Entanglement for the two-Gaussian superposition at any xi."""
    xi, wt = groups.xi, groups.omegaT
    a0, a2, a4 = f_functions(xi)
    bracket = xi**4 / 4 + xi**2 * (1 + wt**2 / 4) + a0 + a2 * wt**2 / 3 + a4 * wt**4 / 9
    value = 2 * groups.phi * wt * groups.epsilon**2 * math.sqrt(bracket)
    return ClosedFormResult(value, "unified")


def entanglement_unified_dimensional(G, m, hbar, d, alpha, beta, T) -> float:
    """Same quantity as :func:`entanglement_unified`, from raw parameters."""
    wt = hbar / (m * alpha**2) * T
    x = beta / alpha
    a0, a2, a4 = f_functions(x)
    bracket = (
        beta**4 / 4
        + alpha**2 * beta**2 * (1 + wt**2 / 4)
        + alpha**4 * (a0 + a2 * wt**2 / 3 + a4 * wt**4 / 9)
    )
    return 2 * G * m**2 * T / (hbar * d) / d**2 * math.sqrt(bracket)


def entanglement_path_limit(groups: DimensionlessGroups) -> ClosedFormResult:
    """Two well separated paths: phi wT (beta/d)^2."""
    return ClosedFormResult(groups.phi * groups.omegaT * groups.beta_over_d**2, "path_limit")


def entanglement_oscillator_limit(groups: DimensionlessGroups) -> ClosedFormResult:
    wt = groups.omegaT
    value = groups.phi * wt * 2 * groups.epsilon**2 * _osc_root(wt)
    return ClosedFormResult(value, "oscillator_limit")


def entanglement_oscillator_large_omegaT(groups: DimensionlessGroups) -> ClosedFormResult:
    wt = groups.omegaT
    value = (2.0 / 3.0) * groups.phi * wt * (groups.epsilon * wt) ** 2
    return ClosedFormResult(value, "oscillator_large_omegaT")


def relativistic_correction(
    groups: DimensionlessGroups, thresholds: RegimeThresholds = RegimeThresholds()
) -> RelativisticCorrection:
    """Leading-order retardation correction for a single Gaussian (xi = 0).

    ``general`` corrects the oscillator limit at any wT; ``large_omegaT``
    corrects the wT >> 1 form with the factor -(3/2)(Omega/wT)^2.  Both carry
    the signed correction in ``correction`` and base + correction in
    ``value``.  Outside the regime of validity the value may turn negative;
    it is never clamped.
    """
    if groups.xi != 0:
        raise UnsupportedRegimeError(
            "the relativistic correction is only known for a single Gaussian (xi = 0)"
        )
    if groups.Omega > thresholds.Omega:
        warnings.warn(
            f"omega d/c = {groups.Omega:.3g} exceeds {thresholds.Omega:.3g}",
            RegimeWarning,
            stacklevel=2,
        )
    wt, om = groups.omegaT, groups.Omega
    base = entanglement_oscillator_limit(groups).value
    delta = (
        -0.5 * om**2 * groups.phi * wt * 2 * groups.epsilon**2
        * (wt**2 / 3 - 1) / _osc_root(wt)
    )
    large = entanglement_oscillator_large_omegaT(groups).value
    delta_large = -1.5 * (om / wt) ** 2 * large
    return RelativisticCorrection(
        general=ClosedFormResult(base + delta, "relativistic_corrected", delta),
        large_omegaT=ClosedFormResult(large + delta_large, "relativistic_corrected", delta_large),
    )
