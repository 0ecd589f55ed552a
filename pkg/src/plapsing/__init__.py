"""Numerical toolkit for boundary singularities of -Δ_p u + |∇u|^q = 0."""

from .exponents import ProblemParams, beta_q, lambda_of, q_star, beta_star_closed_form, check_bounds
from .eigensolver import solve_beta_star, integrate_phase, reconstruct_profile
from .profiles import solve_omega_star, nonexistence_scan
from .pdesolver import PolarGrid, solve_steady, fit_exponent

__all__ = [
    "ProblemParams", "beta_q", "lambda_of", "q_star", "beta_star_closed_form",
    "check_bounds", "solve_beta_star", "integrate_phase", "reconstruct_profile",
    "solve_omega_star", "nonexistence_scan", "PolarGrid", "solve_steady", "fit_exponent",
]
