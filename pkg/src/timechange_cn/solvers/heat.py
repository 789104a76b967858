"""
Heat equation u_t = u_xx/2 with Dirac initial data

Solvers for the time-changed Crank-Nicolson scheme and its original-variable
comparators (plain CN, backward Euler, Rannacher start-up), plus the exact
solution used for error measurement.
"""

import logging
import math

import numpy as np

from ..exceptions import GridError
from ..mesh import check_lambda
from ..models import SchemeSpec, SchemeVariant, SolutionField, SpaceGrid, TimeGrid
from .tridiag import (
    DEFAULT_METHOD,
    Boundary,
    heat_operator,
    step_heat_original,
    step_heat_timechanged,
    theta_step,
)

logger = logging.getLogger(__name__)


def dirac_initial(grid: SpaceGrid, periodic: bool = False) -> SolutionField:
    """
    1/h at x = 0, zero elsewhere, so h * sum U = 1

    An origin at an end node is only accepted for periodic fields, where
    nodes 0 and M are the same point and both carry the mass.
    """
    j0 = grid.index_of(0.0)
    if j0 is None:
        raise GridError(f"x = 0 is not a node of [{grid.x_min}, {grid.x_max}] with M={grid.M}")
    endpoint = j0 in (0, grid.M)
    if endpoint and not periodic:
        raise GridError("x = 0 is a Dirichlet boundary node; the Dirac mass would be clamped")
    values = np.zeros(grid.M + 1)
    values[j0] = 1.0 / grid.h
    if endpoint:
        values[0] = values[grid.M] = 1.0 / grid.h
    return SolutionField(grid=grid, values=values, level=0)


def exact_heat(x, t: float):
    """Gaussian kernel (2 pi t)^{-1/2} exp(-x^2/(2t)); x may be an array"""
    if t <= 0:
        raise ValueError(f"exact solution needs t > 0, got t={t}")
    return np.exp(-np.square(x) / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)


def max_norm_error(field: SolutionField, t: float) -> float:
    """max_j |U_j - u(x_j, t)|"""
    return float(np.max(np.abs(field.values - exact_heat(field.grid.nodes(), t))))


def node_error(field: SolutionField, t: float, x: float = 0.0) -> float:
    """Signed error U_j - u(x_j, t) at the node x"""
    j = field.grid.index_of(x)
    if j is None:
        raise GridError(f"x = {x} is not a grid node")
    return float(field.values[j] - exact_heat(x, t))


def solve_heat(
    scheme: SchemeSpec,
    grid: SpaceGrid,
    tg: TimeGrid,
    boundary: Boundary = Boundary.dirichlet(),
    method: str = DEFAULT_METHOD,
) -> SolutionField:
    """
    March Dirac data to t = T

    cn_timechanged takes N uniform steps of size k in t~ = sqrt(t). The other
    variants take N uniform steps of size T/N in t; rannacher(m) uses backward
    Euler for the first m of them.
    """
    check_lambda(scheme.lam, grid, tg)
    field = dirac_initial(grid, periodic=boundary.is_periodic)
    lam = scheme.lam

    if scheme.variant is SchemeVariant.CN_TIMECHANGED:
        for n in range(tg.N):
            field = step_heat_timechanged(field, n, lam, boundary, method)
    else:
        dt = tg.T / tg.N
        for n in range(tg.N):
            theta = _theta_for_step(scheme, n)
            field = step_heat_original(field, lam, theta, dt, boundary, method)

    logger.debug(
        "solve_heat %s lambda=%s M=%d N=%d done",
        scheme.theta_schedule_label, lam, grid.M, tg.N,
    )
    return field


def _theta_for_step(scheme: SchemeSpec, n: int) -> float:
    if scheme.variant is SchemeVariant.BACKWARD_EULER:
        return 1.0
    if scheme.variant is SchemeVariant.RANNACHER and n < scheme.n_startup:
        return 1.0
    return 0.5


def solve_heat_nonuniform(
    grid: SpaceGrid,
    tg: TimeGrid,
    boundary: Boundary = Boundary.dirichlet(),
    method: str = DEFAULT_METHOD,
) -> SolutionField:
    """
    The time-changed scheme written in the original time variable

    Steps dt_n = t_{n+1} - t_n on t_n = (n k)^2 with implicit weight
    theta_n = t~_{n+1} / (t~_n + t~_{n+1}); this reproduces solve_heat with
    cn_timechanged up to rounding.
    """
    field = dirac_initial(grid, periodic=boundary.is_periodic)
    op = heat_operator(grid.M + 1)
    h2 = grid.h * grid.h
    for n in range(tg.N):
        dt = tg.original_step(n)
        tt_n, tt_np1 = tg.transformed_time(n), tg.transformed_time(n + 1)
        theta = tt_np1 / (tt_n + tt_np1)
        mu = dt / h2
        values = theta_step(field.values, op, (1.0 - theta) * mu, theta * mu, boundary, method)
        field = field.with_values(values, n + 1)
    return field
