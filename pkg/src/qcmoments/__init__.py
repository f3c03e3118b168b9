"""Quantum and classical moment dynamics, moment brackets and moment inequalities."""

from .symcore import MomentKey, MomentPoly, format_poly, moment, parse_poly
from .opalgebra import OperatorSum, expectation_of_product, to_moments, weyl_moment
from .brackets import bracket_oracle, classical_bracket, moment_bracket, poisson_bracket, quantum_bracket
from .eomgen import EomSystem, HamiltonianSpec, derive_eom, effective_hamiltonian, heisenberg_drift
from .dynamics import MomentState, ensemble_evolve, integrate, monitor_conserved, sample_moments
from .inequalities import Inequality, check_family, classify_uncertainty, enumerate_catalog, reduce_to_pure_pair
from .stationary import StationaryProblem, equilibrium_system, recursion_step, stationary_condition

__version__ = "0.1.0"

__all__ = [
    "MomentKey",
    "MomentPoly",
    "format_poly",
    "moment",
    "parse_poly",
    "OperatorSum",
    "expectation_of_product",
    "to_moments",
    "weyl_moment",
    "bracket_oracle",
    "classical_bracket",
    "moment_bracket",
    "poisson_bracket",
    "quantum_bracket",
    "EomSystem",
    "HamiltonianSpec",
    "derive_eom",
    "effective_hamiltonian",
    "heisenberg_drift",
    "MomentState",
    "ensemble_evolve",
    "integrate",
    "monitor_conserved",
    "sample_moments",
    "Inequality",
    "check_family",
    "classify_uncertainty",
    "enumerate_catalog",
    "reduce_to_pure_pair",
    "StationaryProblem",
    "equilibrium_system",
    "recursion_step",
    "stationary_condition",
]
