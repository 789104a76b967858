"""
Tridiagonal assembly and solves for theta-scheme time steps

Every step in this package has the form

    (I + w_imp A) U^{n+1} = (I - w_exp A) U^n

for a three-point spatial operator A. The heat steps use the dimensionless
operator A = [-1/2, 1, -1/2] (i.e. -h^2/2 times the second difference), so the
weights carry the mesh ratios: w = n lambda^2 for the time-changed scheme and
w = theta dt/h^2 in the original variable.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg

from ..exceptions import DiagonalDominanceError, ZeroPivotError
from ..models import SolutionField

logger = logging.getLogger(__name__)

DEFAULT_METHOD = "banded"


class Closure(str, Enum):
    """Boundary closure of the spatial operator"""
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class Boundary:
    """Dirichlet values for the new time level, or periodic wrap-around"""

    closure: Closure = Closure.DIRICHLET
    left: float = 0.0
    right: float = 0.0

    @classmethod
    def dirichlet(cls, left: float = 0.0, right: float = 0.0) -> "Boundary":
        return cls(Closure.DIRICHLET, float(left), float(right))

    @classmethod
    def periodic(cls) -> "Boundary":
        return cls(Closure.PERIODIC)

    @property
    def is_periodic(self) -> bool:
        return self.closure is Closure.PERIODIC


@dataclass(frozen=True)
class SpatialOperator:
    """
    Row coefficients of a three-point operator on nodes 0..M

    (A u)_j = lower[j] u_{j-1} + diag[j] u_j + upper[j] u_{j+1}
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @classmethod
    def constant(cls, n_nodes: int, lower: float, diag: float, upper: float) -> "SpatialOperator":
        return cls(
            np.full(n_nodes, lower, dtype=float),
            np.full(n_nodes, diag, dtype=float),
            np.full(n_nodes, upper, dtype=float),
        )

    def apply(self, u: np.ndarray, periodic: bool = False) -> np.ndarray:
        """A u on interior rows (Dirichlet) or on rows 0..M-1 (periodic); other rows are 0"""
        out = np.zeros_like(u)
        if periodic:
            m = u.size - 1
            v = u[:m]
            out[:m] = (
                self.lower[:m] * np.roll(v, 1)
                + self.diag[:m] * v
                + self.upper[:m] * np.roll(v, -1)
            )
            out[m] = out[0]
        else:
            out[1:-1] = (
                self.lower[1:-1] * u[:-2]
                + self.diag[1:-1] * u[1:-1]
                + self.upper[1:-1] * u[2:]
            )
        return out


HEAT_STENCIL = (-0.5, 1.0, -0.5)


def heat_operator(n_nodes: int) -> SpatialOperator:
    """Dimensionless -(h^2/2) d^2/dx^2"""
    return SpatialOperator.constant(n_nodes, *HEAT_STENCIL)


@dataclass
class TridiagonalSystem:
    """
    Interior-node system with Dirichlet data folded into rhs

    lower has length n-1 (A[i, i-1]), diag length n, upper length n-1 (A[i, i+1]).
    For a cyclic system the wrap-around entries are corner_lower = A[0, n-1] and
    corner_upper = A[n-1, 0].
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray
    corner_lower: Optional[float] = None
    corner_upper: Optional[float] = None

    def __post_init__(self):
        n = self.diag.size
        if self.rhs.shape[0] != n:
            raise ValueError("rhs length must match diag length")
        if self.lower.size != n - 1 or self.upper.size != n - 1:
            raise ValueError("lower/upper must have length n-1")

    @property
    def size(self) -> int:
        return self.diag.size

    @property
    def cyclic(self) -> bool:
        return self.corner_lower is not None

    def off_diagonal_sums(self) -> np.ndarray:
        sums = np.zeros(self.size)
        sums[1:] += np.abs(self.lower)
        sums[:-1] += np.abs(self.upper)
        if self.cyclic:
            sums[0] += abs(self.corner_lower)
            sums[-1] += abs(self.corner_upper)
        return sums

    def check_dominance(self) -> None:
        """Raise DiagonalDominanceError on the first row that is not strictly dominant"""
        bad = np.nonzero(np.abs(self.diag) <= self.off_diagonal_sums())[0]
        if bad.size:
            i = int(bad[0])
            raise DiagonalDominanceError(
                f"row {i} of {self.size}: |diag|={abs(self.diag[i]):.6g} "
                f"<= off-diagonal sum {self.off_diagonal_sums()[i]:.6g}"
            )

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.lower * x[:-1]
        y[:-1] += self.upper * x[1:]
        if self.cyclic:
            y[0] += self.corner_lower * x[-1]
            y[-1] += self.corner_upper * x[0]
        return y

    def residual_norm(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(self.matvec(x) - self.rhs)))

    def to_dense(self) -> np.ndarray:
        a = np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)
        if self.cyclic:
            a[0, -1] += self.corner_lower
            a[-1, 0] += self.corner_upper
        return a


def thomas(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Thomas elimination without pivoting; rhs may have extra trailing columns"""
    n = diag.size
    d = diag.astype(float, copy=True)
    y = np.array(rhs, dtype=float, copy=True)

    for i in range(1, n):
        if d[i - 1] == 0.0:
            raise ZeroPivotError(f"zero pivot at row {i - 1}")
        w = lower[i - 1] / d[i - 1]
        d[i] -= w * upper[i - 1]
        y[i] -= w * y[i - 1]

    if d[-1] == 0.0:
        raise ZeroPivotError(f"zero pivot at row {n - 1}")
    x = np.empty_like(y)
    x[-1] = y[-1] / d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = (y[i] - upper[i] * x[i + 1]) / d[i]
    return x


def _banded(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    try:
        return scipy.linalg.solve_banded((1, 1), ab, rhs, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise ZeroPivotError(f"banded solve failed: {e}")


def _solve_open(lower, diag, upper, rhs, method: str) -> np.ndarray:
    if method == "thomas":
        return thomas(lower, diag, upper, rhs)
    if method == "banded":
        return _banded(lower, diag, upper, rhs)
    raise ValueError(f"unknown tridiagonal method {method!r}")


def solve_tridiagonal(system: TridiagonalSystem, method: str = DEFAULT_METHOD) -> np.ndarray:
    """
    Solve the (possibly cyclic) tridiagonal system

    Cyclic systems use the Sherman-Morrison correction: two solves with the
    corner-free matrix, then a rank-one update.
    """
    if not system.cyclic:
        return _solve_open(system.lower, system.diag, system.upper, system.rhs, method)

    n = system.size
    alpha = system.corner_upper   # A[n-1, 0]
    beta = system.corner_lower    # A[0, n-1]
    gamma = -system.diag[0]
    diag = system.diag.astype(float, copy=True)
    diag[0] -= gamma
    diag[-1] -= alpha * beta / gamma

    u = np.zeros(n)
    u[0] = gamma
    u[-1] = alpha
    both = _solve_open(
        system.lower, diag, system.upper, np.column_stack([system.rhs, u]), method
    )
    x, z = both[:, 0], both[:, 1]
    fact = (x[0] + beta * x[-1] / gamma) / (1.0 + z[0] + beta * z[-1] / gamma)
    return x - fact * z


def assemble_theta_system(
    values: np.ndarray,
    op: SpatialOperator,
    w_exp: float,
    w_imp: float,
    boundary: Boundary,
) -> TridiagonalSystem:
    """
    System for (I + w_imp A) U^{n+1} = (I - w_exp A) U^n

    Dirichlet: unknowns are nodes 1..M-1, boundary.left/right are the new-level
    values at nodes 0 and M. Periodic: unknowns are nodes 0..M-1.
    """
    periodic = boundary.is_periodic
    rhs_full = values - w_exp * op.apply(values, periodic=periodic) if w_exp else values.copy()

    if periodic:
        m = values.size - 1
        system = TridiagonalSystem(
            lower=w_imp * op.lower[1:m],
            diag=1.0 + w_imp * op.diag[:m],
            upper=w_imp * op.upper[: m - 1],
            rhs=rhs_full[:m].copy(),
            corner_lower=w_imp * op.lower[0],
            corner_upper=w_imp * op.upper[m - 1],
        )
    else:
        rhs = rhs_full[1:-1].copy()
        rhs[0] -= w_imp * op.lower[1] * boundary.left
        rhs[-1] -= w_imp * op.upper[-2] * boundary.right
        system = TridiagonalSystem(
            lower=w_imp * op.lower[2:-1],
            diag=1.0 + w_imp * op.diag[1:-1],
            upper=w_imp * op.upper[1:-2],
            rhs=rhs,
        )
    system.check_dominance()
    return system


def scatter(solution: np.ndarray, n_nodes: int, boundary: Boundary) -> np.ndarray:
    """Interior (or periodic) solution back onto all nodes 0..M"""
    out = np.empty(n_nodes)
    if boundary.is_periodic:
        out[:-1] = solution
        out[-1] = solution[0]
    else:
        out[0] = boundary.left
        out[1:-1] = solution
        out[-1] = boundary.right
    return out


def theta_step(
    values: np.ndarray,
    op: SpatialOperator,
    w_exp: float,
    w_imp: float,
    boundary: Boundary,
    method: str = DEFAULT_METHOD,
) -> np.ndarray:
    system = assemble_theta_system(values, op, w_exp, w_imp, boundary)
    return scatter(solve_tridiagonal(system, method), values.size, boundary)


def step_heat_timechanged(
    field: SolutionField,
    n: int,
    lam: float,
    boundary: Boundary = Boundary.dirichlet(),
    method: str = DEFAULT_METHOD,
) -> SolutionField:
    """
    One step of the transformed heat equation u_t~ = t~ u_xx

    (1 + (n+1) lam^2) U^{n+1}_j - (n+1) lam^2/2 (U^{n+1}_{j+1} + U^{n+1}_{j-1})
        = (1 - n lam^2) U^n_j + n lam^2/2 (U^n_{j+1} + U^n_{j-1})
    """
    lam2 = lam * lam
    op = heat_operator(field.values.size)
    values = theta_step(field.values, op, n * lam2, (n + 1) * lam2, boundary, method)
    return field.with_values(values, field.level + 1)


def step_heat_original(
    field: SolutionField,
    lam: float,
    theta: float,
    dt: Optional[float] = None,
    boundary: Boundary = Boundary.dirichlet(),
    method: str = DEFAULT_METHOD,
) -> SolutionField:
    """
    One theta-step of u_t = u_xx/2 in the original time variable

    theta=1/2 is Crank-Nicolson, theta=1 backward Euler. The step defaults to
    k = lam*h.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    h = field.h
    if dt is None:
        dt = lam * h
    mu = dt / (h * h)
    op = heat_operator(field.values.size)
    values = theta_step(field.values, op, (1.0 - theta) * mu, theta * mu, boundary, method)
    return field.with_values(values, field.level + 1)
