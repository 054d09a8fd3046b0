"""Numerical lab for weighted second-derivative bounds of regularized p-Laplace solutions."""

from .grid import BallRegion, GridDomain, ball_nodes, build_grid, offset_grid, shrinking_radius
from .solver import PDEProblem, SolveResult, SolverConfig, energy, energy_gradient, solve, weak_residual
from .hessian import WeightedHessianField, gradient_field, hessian_field, lq_norm, weighted_hessian
from .ladder import LadderConfig, LadderReport, ladder_sequences, run_ladder, verify_step
from .exponents import CZConstantModel, admissibility_report, nu_window, p_range, q_hat
from .oracles import manufactured, oracle_case, power_example_eval, power_example_sup

__version__ = "0.1.0"
