"""Spectral Galerkin solutions of evolution and stationary problems.

Real trigonometric Galerkin spaces, projected right-hand sides, explicit
time integration with conservation monitoring, stationary solves by
homotopy, Burgers entropy oracles, micro/macro decomposition and
test-function pairings.
"""
from .space import (CoeffVector, FunctionSpace, Kind, SpaceError, basis_vector, build_space,
                    constant, derivative, evaluate, inner_product, integral, laplacian,
                    multiply_project, project, project_values, transfer)
from .operators import (Entropy, EvolutionProblem, OperatorTag, advection_rhs, burgers_rhs,
                        entropy_flux, nse_rhs, viscous_burgers_rhs, wave_rhs)
from .evolution import (ConservationReport, Status, Trajectory, conservation_report,
                        entropy_series, integrate)
from .stationary import (ContinuationError, StationaryProblem, check_sphere_condition,
                         find_sphere_radius, p_laplacian_operator, solve_stationary)
from .entropy import (PreconditionError, RiemannData, RiemannField, SineEntropySolution,
                      characteristics_solution, riemann_entropy_solution, shock_time,
                      viscosity_sweep, weak_residual)
from .micro_macro import Mollified, decompose, micro_diagnostics, transport_residual
from .testfunctions import TestFunction, test_function_suite
from .pairing import pair, refinement_study

__version__ = "0.1.0"
