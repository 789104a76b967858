"""Solvers package"""

from .tridiag import Boundary, SpatialOperator, TridiagonalSystem, solve_tridiagonal, theta_step
from .heat import solve_heat, solve_heat_nonuniform
from .blackscholes import bs_analytic, solve_european, greeks_from_field
from .american import solve_american_put, PenaltySolveStats

__all__ = [
    "Boundary",
    "SpatialOperator",
    "TridiagonalSystem",
    "solve_tridiagonal",
    "theta_step",
    "solve_heat",
    "solve_heat_nonuniform",
    "bs_analytic",
    "solve_european",
    "greeks_from_field",
    "solve_american_put",
    "PenaltySolveStats",
]
