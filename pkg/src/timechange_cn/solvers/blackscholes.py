"""
Black-Scholes: closed forms and the time-changed Crank-Nicolson solver

With tau = T - t and t~ = sqrt(tau) the pricing equation becomes

    dV/dt~ - 2 t~ (sigma^2 S^2/2 V_SS + r S V_S - r V) = 0,

marched from the payoff at t~ = 0 to t~ = sqrt(T) on a uniform S-grid. Each
step solves (I + k t~_{n+1} A) V^{n+1} = (I - k t~_n A) V^n with A the central
difference discretisation of minus the spatial operator.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.stats import norm

from ..exceptions import GridError
from ..models import BSParams, PayoffKind, SolutionField, SpaceGrid, TimeGrid
from .tridiag import DEFAULT_METHOD, Boundary, SpatialOperator, theta_step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Greeks:
    """Value and sensitivities at one (S, tau)"""
    value: float
    delta: float
    gamma: float
    theta: float


def _d1_d2(S: float, tau: float, p: BSParams) -> Tuple[float, float]:
    vol = p.sigma * math.sqrt(tau)
    d1 = (math.log(S / p.K) + (p.r + 0.5 * p.sigma**2) * tau) / vol
    return d1, d1 - vol


def bs_analytic(S: float, tau: float, p: BSParams) -> Greeks:
    """
    Closed-form value, delta, gamma and theta

    theta follows Theta_C = S n(d1) sigma / (2 sqrt tau) - r K e^{-r tau} N(d2),
    the convention under which the transformed theta equals -2 t~ Theta_C.
    """
    if S <= 0 or tau <= 0:
        raise ValueError(f"need S > 0 and tau > 0, got S={S}, tau={tau}")
    d1, d2 = _d1_d2(S, tau, p)
    disc = p.K * math.exp(-p.r * tau)
    gamma = norm.pdf(d1) / (S * p.sigma * math.sqrt(tau))
    vega_term = S * norm.pdf(d1) * p.sigma / (2.0 * math.sqrt(tau))

    if p.payoff is PayoffKind.CALL:
        value = S * norm.cdf(d1) - disc * norm.cdf(d2)
        delta = norm.cdf(d1)
        theta = vega_term - p.r * disc * norm.cdf(d2)
    else:
        value = disc * norm.cdf(-d2) - S * norm.cdf(-d1)
        delta = norm.cdf(d1) - 1.0
        theta = vega_term + p.r * disc * norm.cdf(-d2)
    return Greeks(float(value), float(delta), float(gamma), float(theta))


def transformed_theta(S: float, t_tilde: float, p: BSParams) -> float:
    """
    dC/dt~ = -S n(d1) sigma + 2 t~ r K e^{-r t~^2} N(d2) for the call

    Finite at t~ = 0: -S n(0) sigma at the strike, 0 elsewhere.
    """
    if S <= 0 or t_tilde < 0:
        raise ValueError(f"need S > 0 and t~ >= 0, got S={S}, t~={t_tilde}")
    if t_tilde == 0.0:
        if S == p.K:
            return -S * float(norm.pdf(0.0)) * p.sigma
        return 0.0
    d1, d2 = _d1_d2(S, t_tilde * t_tilde, p)
    return float(
        -S * norm.pdf(d1) * p.sigma
        + 2.0 * t_tilde * p.r * p.K * math.exp(-p.r * t_tilde**2) * norm.cdf(d2)
    )


def payoff(S, p: BSParams):
    if p.payoff is PayoffKind.CALL:
        return np.maximum(np.asarray(S) - p.K, 0.0)
    return np.maximum(p.K - np.asarray(S), 0.0)


def bs_operator(grid: SpaceGrid, p: BSParams) -> SpatialOperator:
    """
    Minus the discrete Black-Scholes operator on nodes S_j = x_min + j h

    Central differences for both derivatives. Where the drift dominates the
    diffusion (sigma^2 S < r h) the first derivative is taken one-sided forward
    so the off-diagonals keep their sign.
    """
    S = grid.nodes()
    h = grid.h
    a = 0.5 * p.sigma**2 * S**2 / h**2
    b = p.r * S / (2.0 * h)

    lower = -(a - b)
    diag = 2.0 * a + p.r
    upper = -(a + b)

    upwind = a < b
    if np.any(upwind[1:-1]):
        logger.debug("upwinding drift at %d nodes", int(np.sum(upwind[1:-1])))
        lower = np.where(upwind, -a, lower)
        diag = np.where(upwind, 2.0 * a + 2.0 * b + p.r, diag)
        upper = np.where(upwind, -(a + 2.0 * b), upper)
    return SpatialOperator(lower=lower, diag=diag, upper=upper)


def european_boundary(p: BSParams, t_tilde: float, S_max: float, S_min: float = 0.0) -> Boundary:
    disc = p.K * math.exp(-p.r * t_tilde * t_tilde)
    if p.payoff is PayoffKind.CALL:
        return Boundary.dirichlet(max(S_min - disc, 0.0), S_max - disc)
    return Boundary.dirichlet(max(disc - S_min, 0.0), 0.0)


def step_bs_timechanged(
    V: SolutionField,
    t_tilde_n: float,
    t_tilde_np1: float,
    p: BSParams,
    op: SpatialOperator | None = None,
    boundary: Boundary | None = None,
    method: str = DEFAULT_METHOD,
) -> SolutionField:
    """(I + k t~_{n+1} A) V^{n+1} = (I - k t~_n A) V^n with k = t~_{n+1} - t~_n"""
    grid = V.grid
    if op is None:
        op = bs_operator(grid, p)
    if boundary is None:
        boundary = european_boundary(p, t_tilde_np1, grid.x_max, grid.x_min)
    k = t_tilde_np1 - t_tilde_n
    values = theta_step(V.values, op, k * t_tilde_n, k * t_tilde_np1, boundary, method)
    return V.with_values(values, V.level + 1)


def initial_payoff(p: BSParams, grid: SpaceGrid) -> SolutionField:
    if grid.index_of(p.K) is None:
        raise GridError(f"strike K={p.K} is not a node of the S-grid (h={grid.h})")
    return SolutionField(grid=grid, values=payoff(grid.nodes(), p), level=0)


def solve_european(
    p: BSParams, grid: SpaceGrid, tg: TimeGrid, method: str = DEFAULT_METHOD
) -> SolutionField:
    """Values at tau = T from the payoff, N uniform steps in t~"""
    V = initial_payoff(p, grid)
    op = bs_operator(grid, p)
    for n in range(tg.N):
        V = step_bs_timechanged(
            V, tg.transformed_time(n), tg.transformed_time(n + 1), p, op=op, method=method
        )
    logger.debug("solve_european %s M=%d N=%d done", p.payoff.value, grid.M, tg.N)
    return V


def solve_bs_nonuniform(
    p: BSParams, grid: SpaceGrid, tg: TimeGrid, method: str = DEFAULT_METHOD
) -> SolutionField:
    """
    The same scheme in tau: steps tau_{n+1} - tau_n on tau_n = t~_n^2 with
    implicit weight t~_{n+1}/(t~_n + t~_{n+1})
    """
    V = initial_payoff(p, grid)
    op = bs_operator(grid, p)
    for n in range(tg.N):
        tt_n, tt_np1 = tg.transformed_time(n), tg.transformed_time(n + 1)
        dtau = tt_np1**2 - tt_n**2
        theta = tt_np1 / (tt_n + tt_np1)
        boundary = european_boundary(p, tt_np1, grid.x_max, grid.x_min)
        values = theta_step(
            V.values, op, (1.0 - theta) * dtau, theta * dtau, boundary, method
        )
        V = V.with_values(values, n + 1)
    return V


def greeks_from_field(V: SolutionField) -> Tuple[np.ndarray, np.ndarray]:
    """Central-difference delta and gamma, one-sided at the two end nodes"""
    v = V.values
    if v.size < 3:
        raise ValueError("need at least 3 nodes for finite-difference greeks")
    h = V.h
    delta = np.empty_like(v)
    gamma = np.empty_like(v)
    delta[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    gamma[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)
    delta[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    delta[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    gamma[0] = (v[0] - 2.0 * v[1] + v[2]) / (h * h)
    gamma[-1] = (v[-1] - 2.0 * v[-2] + v[-3]) / (h * h)
    return delta, gamma


def atm_greeks(V: SolutionField, strike: float) -> Tuple[float, float, float]:
    """(value, delta, gamma) at the node S = K"""
    j = V.grid.index_of(strike)
    if j is None:
        raise GridError(f"strike {strike} is not a grid node")
    delta, gamma = greeks_from_field(V)
    return float(V.values[j]), float(delta[j]), float(gamma[j])


def bs_gamma_error(V: SolutionField, p: BSParams) -> float:
    """|Gamma_numerical - Gamma_analytic| at the ATM node, tau = T"""
    _, _, gamma = atm_greeks(V, p.K)
    return abs(gamma - bs_analytic(p.K, p.T, p).gamma)


def predicted_bs_order(lam: float, p: BSParams) -> float:
    """min(2, 1/(sigma^2 K^2 lambda^2))"""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return min(2.0, 1.0 / (p.sigma**2 * p.K**2 * lam**2))
