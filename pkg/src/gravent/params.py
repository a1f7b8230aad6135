"""Physical parameters, dimensionless groups and regime-of-validity checks.

Every physics kernel in the package works in natural units of the
problem: hbar = m = omega = 1, lengths measured in units of the Gaussian
width alpha and times in units of 1/omega, where omega = hbar/(m alpha^2)
is the nominal frequency of the oscillator whose ground state has width
alpha.  Only the five groups below survive this nondimensionalization:

    phi     = G m^2 / (hbar omega d)   gravitational strength
    epsilon = alpha / d                relative spread
    xi      = beta / alpha             path separation in widths
    Omega   = omega d / c              retardation strength
    omegaT  = omega T                  interaction duration
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

__all__ = [
    "InvalidParameterError",
    "RegimeWarning",
    "ExperimentParams",
    "DimensionlessGroups",
    "RegimeThresholds",
    "RegimeCheck",
    "RegimeReport",
    "derive_groups",
    "validate_regime",
]

# CODATA 2018
G_SI = 6.67430e-11
HBAR_SI = 1.054571817e-34
C_SI = 299792458.0


class InvalidParameterError(ValueError):
    """A physical or dimensionless parameter is outside its allowed domain."""

    def __init__(self, field_name: str, value, requirement: str):
        self.field = field_name
        self.value = value
        super().__init__(f"invalid parameter {field_name}={value!r}: {requirement}")


class RegimeWarning(UserWarning):
    """An expansion parameter exceeds its regime-of-validity threshold."""


def _require(name, value, positive=True):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise InvalidParameterError(name, value, "must be a real number")
    if not math.isfinite(value):
        raise InvalidParameterError(name, value, "must be finite")
    if positive and value <= 0:
        raise InvalidParameterError(name, value, "must be > 0")
    if not positive and value < 0:
        raise InvalidParameterError(name, value, "must be >= 0")


@dataclass(frozen=True)
class ExperimentParams:
    """Physical inputs of the two-particle experiment.

    Defaults for ``G``, ``hbar`` and ``c`` are SI values; pass 1.0 for all
    three to work in natural units.
    """

    m: float
    d: float
    alpha: float
    beta: float
    T: float
    G: float = G_SI
    hbar: float = HBAR_SI
    c: float = C_SI

    def __post_init__(self):
        for name in ("m", "d", "alpha", "T", "G", "hbar", "c"):
            _require(name, getattr(self, name))
        _require("beta", self.beta, positive=False)

    @property
    def omega(self) -> float:
        return self.hbar / (self.m * self.alpha**2)


@dataclass(frozen=True)
class DimensionlessGroups:
    """The dimensionless inputs consumed by every physics kernel.

    ``omega`` is the physical nominal frequency when the groups were derived
    from :class:`ExperimentParams`; it is informational only.
    """

    phi: float
    epsilon: float
    xi: float = 0.0
    Omega: float = 0.0
    omegaT: float = 1.0
    omega: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        _require("phi", self.phi, positive=False)
        _require("epsilon", self.epsilon)
        _require("xi", self.xi, positive=False)
        _require("Omega", self.Omega, positive=False)
        _require("omegaT", self.omegaT)

    @property
    def beta_over_d(self) -> float:
        return self.epsilon * self.xi

    def as_dict(self) -> dict:
        return {
            "phi": self.phi,
            "epsilon": self.epsilon,
            "xi": self.xi,
            "Omega": self.Omega,
            "omegaT": self.omegaT,
        }


def derive_groups(params: ExperimentParams) -> DimensionlessGroups:
    """Compute the dimensionless groups of an experiment.

    Raises
    ------
    InvalidParameterError
        If a parameter is non-positive or the groups are not finite.
    """
    if not isinstance(params, ExperimentParams):
        raise TypeError("expected ExperimentParams")
    # re-run the field checks in case the instance was built with object.__setattr__
    params.__post_init__()
    omega = params.omega
    if not (math.isfinite(omega) and omega > 0):
        raise InvalidParameterError("omega", omega, "hbar/(m alpha^2) must be finite and > 0")
    # grouped to keep intermediates in range for SI inputs
    phi = (params.G * params.m / params.hbar) * (params.m / (omega * params.d))
    groups = {
        "phi": phi,
        "epsilon": params.alpha / params.d,
        "xi": params.beta / params.alpha,
        "Omega": omega * params.d / params.c,
        "omegaT": omega * params.T,
    }
    for name, value in groups.items():
        if not math.isfinite(value):
            raise InvalidParameterError(name, value, "derived group is not finite")
    return DimensionlessGroups(omega=omega, **groups)


@dataclass(frozen=True)
class RegimeThresholds:
    """Warn levels for the small parameters of the expansions."""

    epsilon: float = 0.1
    beta_over_d: float = 0.1
    Omega: float = 0.1
    spread: float = 0.1


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    description: str
    value: float
    threshold: float

    @property
    def status(self) -> str:
        return "pass" if self.value <= self.threshold else "warn"


@dataclass(frozen=True)
class RegimeReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.status == "pass" for c in self.checks)

    @property
    def warnings(self) -> list:
        return [c for c in self.checks if c.status == "warn"]

    def __getitem__(self, name: str) -> RegimeCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def emit(self, stacklevel: int = 2) -> None:
        """Issue a :class:`RegimeWarning` for every failed check."""
        for c in self.warnings:
            warnings.warn(
                f"{c.description} = {c.value:.3g} exceeds {c.threshold:.3g}",
                RegimeWarning,
                stacklevel=stacklevel + 1,
            )

    def rows(self) -> list:
        return [(c.name, c.description, c.value, c.threshold, c.status) for c in self.checks]


def validate_regime(
    groups: DimensionlessGroups, thresholds: RegimeThresholds = RegimeThresholds()
) -> RegimeReport:
    """Compare the expansion parameters against their thresholds.

    Reporting only: nothing is raised, every assumption is listed with a
    pass/warn status.
    """
    checks = (
        RegimeCheck("epsilon", "alpha/d", groups.epsilon, thresholds.epsilon),
        RegimeCheck("beta_over_d", "beta/d", groups.beta_over_d, thresholds.beta_over_d),
        RegimeCheck("Omega", "omega d/c", groups.Omega, thresholds.Omega),
        RegimeCheck("spread", "alpha omega T/d", groups.epsilon * groups.omegaT, thresholds.spread),
    )
    return RegimeReport(checks)
