"""Experiments, the implicit comparator, convergence tables and diagnostics."""

from .base import ExactSolution, FileGeometry, RectGeometry, Scenario, ScenarioError
from .convergence import ConvergenceRow, ConvergenceTable, convergence_study, run_level
from .diagnostics import (block_speed_ratio, centerline_profiles, global_velocity,
                          interface_flux, mass_balance)
from .library import cavity, filtration, manufactured, quiescent, yshape
from .reference import reference_implicit_solve

__all__ = [
    "ConvergenceRow", "ConvergenceTable", "ExactSolution", "FileGeometry", "RectGeometry",
    "Scenario", "ScenarioError", "block_speed_ratio", "cavity", "centerline_profiles",
    "convergence_study", "filtration", "global_velocity", "interface_flux", "manufactured",
    "mass_balance", "quiescent", "reference_implicit_solve", "run_level", "yshape",
]
