"""Spectral, simulation and control toolkit for the degenerate wave equation
``w_tt - (x^alpha w_x)_x = p(t) mu(x) w`` on (0, 1) with Neumann conditions."""

from .spectrum import DegeneracySetup, EigenSystem, build_eigensystem, degeneracy_setup
from .innerprod import ModalVector, coupling_matrix, mu_coefficients, project, sobolev_tail
from .simulator import ControlSignal, ModalState, evolve_bilinear, evolve_linearized
from .moment_control import TargetState, regime_report, synthesize_ground_state_control
from .diagnostics import threshold_time

__version__ = "0.1.0"

__all__ = [
    "DegeneracySetup",
    "EigenSystem",
    "build_eigensystem",
    "degeneracy_setup",
    "ModalVector",
    "coupling_matrix",
    "mu_coefficients",
    "project",
    "sobolev_tail",
    "ControlSignal",
    "ModalState",
    "evolve_bilinear",
    "evolve_linearized",
    "TargetState",
    "regime_report",
    "synthesize_ground_state_control",
    "threshold_time",
]
