"""Solver and verification suite for core-shell reaction-diffusion problems.

The package discretizes a semilinear parabolic problem whose diffusivity
jumps across an interior interface, integrates it both spectrally (in the
eigenbasis of the diffusion operator) and nodally (method of lines), and
certifies the energy estimates, continuous-dependence bounds, interface
flux continuity, and smoothed-diffusivity limit behaviour along the
computed solutions.
"""

from .geometry import CoreShellGeometry, Mesh, build_geometry, build_mesh, refine
from .operators import (DiffractionOperator, DiffusionField, EigenBasis,
                        apply_operator, assemble, bilinear_form, eigenbasis,
                        inner_h, norm, project, reconstruct, solve_elliptic)
from .reactions import (ReactionTerm, apply_f, certify_admissibility,
                        certify_lipschitz, constant_source, evaluate_g,
                        michaelis_menten, substrate_inhibition, tabulated,
                        zero_term)
from .solvers import (ConvergenceError, InitialCondition, SolveConfig,
                      SolverError, StationaryResult, Trajectory, fem_solve,
                      galerkin_solve, newton_stationary, resolve_initial,
                      stationary_solve)
from .analysis import (ConvergenceTable, DependenceReport, EnergyReport,
                       FluxStudy, RegularizationTable, dependence_check,
                       energy_report, flux_jump, flux_refinement_study,
                       galerkin_convergence, regularization_study)
from .config import (ConfigError, ExperimentConfig, OutputSettings,
                     SolveSettings, parse_config, validate_config)

__version__ = "0.1.0"

__all__ = [
    "CoreShellGeometry", "Mesh", "build_geometry", "build_mesh", "refine",
    "DiffractionOperator", "DiffusionField", "EigenBasis", "apply_operator",
    "assemble", "bilinear_form", "eigenbasis", "inner_h", "norm", "project",
    "reconstruct", "solve_elliptic",
    "ReactionTerm", "apply_f", "certify_admissibility", "certify_lipschitz",
    "constant_source", "evaluate_g", "michaelis_menten",
    "substrate_inhibition", "tabulated", "zero_term",
    "ConvergenceError", "InitialCondition", "SolveConfig", "SolverError",
    "StationaryResult", "Trajectory", "fem_solve", "galerkin_solve",
    "newton_stationary", "resolve_initial", "stationary_solve",
    "ConvergenceTable", "DependenceReport", "EnergyReport", "FluxStudy",
    "RegularizationTable", "dependence_check", "energy_report", "flux_jump",
    "flux_refinement_study", "galerkin_convergence", "regularization_study",
    "ConfigError", "ExperimentConfig", "OutputSettings", "SolveSettings",
    "parse_config", "validate_config",
]
