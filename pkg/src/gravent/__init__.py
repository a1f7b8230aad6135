"""Gravity-mediated entanglement of delocalized masses.

Closed-form predictions, a stationary-phase simulator with an independent
split-step oracle, and a command-line front end.
"""
from .params import DimensionlessGroups, ExperimentParams, derive_groups, validate_regime
from .closed_form import entanglement_unified, relativistic_correction
from .entanglement import Axis, BipartiteWavefunction, measure_quadrature, measure_schmidt
from .dynamics import LagrangianConfig, action_phase, solve_kepler_bvp, straight_line
from .propagator import EvolutionSpec, OneParticleState, evolve_split_step, evolve_stationary_phase, initial_state

__version__ = "0.1.0"

__all__ = [
    "DimensionlessGroups",
    "ExperimentParams",
    "derive_groups",
    "validate_regime",
    "entanglement_unified",
    "relativistic_correction",
    "Axis",
    "BipartiteWavefunction",
    "measure_quadrature",
    "measure_schmidt",
    "LagrangianConfig",
    "action_phase",
    "solve_kepler_bvp",
    "straight_line",
    "EvolutionSpec",
    "OneParticleState",
    "evolve_split_step",
    "evolve_stationary_phase",
    "initial_state",
]
