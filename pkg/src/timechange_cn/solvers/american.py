"""
American put by the penalty method on the time-changed Crank-Nicolson scheme

Each step solves

    (I + k t~_{n+1} A + rho P) V^{n+1} = (I - k t~_n A) V^n + rho P g

where g is the payoff and P is the diagonal indicator of the active set
{g - V^{n+1} > 0}. The active set is found by iterating until it repeats.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple

import numpy as np

from ..exceptions import PenaltyConvergenceError
from ..models import BSParams, PayoffKind, PenaltyConfig, SolutionField, SpaceGrid, TimeGrid
from .blackscholes import atm_greeks, bs_operator, initial_payoff
from .tridiag import (
    DEFAULT_METHOD,
    Boundary,
    SpatialOperator,
    assemble_theta_system,
    scatter,
    solve_tridiagonal,
)

logger = logging.getLogger(__name__)


def payoff_put(S, K: float):
    """max(K - S, 0)"""
    return np.maximum(K - np.asarray(S, dtype=float), 0.0)


def american_boundary(p: BSParams) -> Boundary:
    """V(0) = K and V(S_max) = 0"""
    return Boundary.dirichlet(p.K, 0.0)


@dataclass
class PenaltySolveStats:
    """Active-set iteration counts, one entry per time step"""
    iterations: List[int] = field(default_factory=list)

    @property
    def max_iterations(self) -> int:
        return max(self.iterations, default=0)

    @property
    def total_iterations(self) -> int:
        return sum(self.iterations)

    def to_dict(self) -> dict:
        return {
            "steps": len(self.iterations),
            "max_iterations": self.max_iterations,
            "total_iterations": self.total_iterations,
        }


def _penalty_solve(
    V: SolutionField,
    t_tilde_n: float,
    t_tilde_np1: float,
    p: BSParams,
    cfg: PenaltyConfig,
    op: SpatialOperator,
    boundary: Boundary,
    method: str,
) -> Tuple[np.ndarray, int]:
    k = t_tilde_np1 - t_tilde_n
    base = assemble_theta_system(V.values, op, k * t_tilde_n, k * t_tilde_np1, boundary)
    n_nodes = V.values.size

    if cfg.rho == 0.0:
        return scatter(solve_tridiagonal(base, method), n_nodes, boundary), 1

    g = payoff_put(V.grid.nodes(), p.K)[1:-1]
    active = g - V.values[1:-1] > 0.0
    current = V.values[1:-1]

    for iteration in range(1, cfg.max_iter + 1):
        penalised = replace(
            base,
            diag=base.diag + cfg.rho * active,
            rhs=base.rhs + cfg.rho * g * active,
        )
        solution = solve_tridiagonal(penalised, method)

        new_active = g - solution > 0.0
        change = float(np.max(np.abs(solution - current)))
        current = solution
        if np.array_equal(new_active, active) or change <= cfg.tol:
            return scatter(solution, n_nodes, boundary), iteration
        active = new_active

    raise PenaltyConvergenceError(
        f"active set still changing after {cfg.max_iter} iterations "
        f"(t~ = {t_tilde_np1:.6g}, last change {change:.3g}, rho={cfg.rho:g})"
    )


def penalty_step(
    V: SolutionField,
    t_tilde_n: float,
    t_tilde_np1: float,
    p: BSParams,
    cfg: PenaltyConfig,
    op: SpatialOperator | None = None,
    boundary: Boundary | None = None,
    method: str = DEFAULT_METHOD,
) -> SolutionField:
    """One penalised time-changed CN step; rho = 0 reduces to the European step"""
    if op is None:
        op = bs_operator(V.grid, p)
    if boundary is None:
        boundary = american_boundary(p)
    values, _ = _penalty_solve(V, t_tilde_n, t_tilde_np1, p, cfg, op, boundary, method)
    return V.with_values(values, V.level + 1)


def solve_american_put(
    p: BSParams,
    grid: SpaceGrid,
    tg: TimeGrid,
    cfg: PenaltyConfig = PenaltyConfig(),
    method: str = DEFAULT_METHOD,
) -> Tuple[SolutionField, PenaltySolveStats]:
    """Put values at tau = T plus per-step active-set iteration counts"""
    if p.payoff is not PayoffKind.PUT:
        p = p.model_copy(update={"payoff": PayoffKind.PUT})
    V = initial_payoff(p, grid)
    op = bs_operator(grid, p)
    boundary = american_boundary(p)
    stats = PenaltySolveStats()

    for n in range(tg.N):
        values, iters = _penalty_solve(
            V, tg.transformed_time(n), tg.transformed_time(n + 1), p, cfg, op, boundary, method
        )
        V = V.with_values(values, n + 1)
        stats.iterations.append(iters)

    logger.debug(
        "american put M=%d N=%d: max %d active-set iterations per step",
        grid.M, tg.N, stats.max_iterations,
    )
    return V, stats


def successive_ratio(coarse: float, mid: float, fine: float) -> float:
    """(coarse - mid)/(mid - fine); about 2^p for order p under halving"""
    denom = mid - fine
    if denom == 0.0:
        raise ZeroDivisionError("successive_ratio: mid and fine values coincide")
    return (coarse - mid) / denom


def table_row_ratios(
    levels: Sequence[Tuple[float, float, float]],
) -> Tuple[float, float, float]:
    """
    Value, delta and gamma ratios from three consecutive levels

    levels holds (value, delta, gamma) at the ATM node, coarsest first.
    """
    if len(levels) != 3:
        raise ValueError(f"need exactly 3 levels, got {len(levels)}")
    coarse, mid, fine = levels
    return tuple(successive_ratio(coarse[i], mid[i], fine[i]) for i in range(3))


def atm_quantities(V: SolutionField, p: BSParams) -> Tuple[float, float, float]:
    """(value, delta, gamma) at S = K"""
    return atm_greeks(V, p.K)
