"""Data models for grids, schemes, market parameters and solution fields"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class TimeMode(str, Enum):
    """Which time variable is uniformly stepped"""
    TRANSFORMED = "transformed"
    ORIGINAL = "original"


class SchemeVariant(str, Enum):
    """Time-stepping variants for the heat equation"""
    CN_ORIGINAL = "cn_original"
    CN_TIMECHANGED = "cn_timechanged"
    BACKWARD_EULER = "backward_euler"
    RANNACHER = "rannacher"


class PayoffKind(str, Enum):
    """European payoff type"""
    CALL = "call"
    PUT = "put"


class SpaceGrid(BaseModel):
    """Uniform 1-D mesh with M intervals on [x_min, x_max]"""
    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float
    M: int = Field(ge=2)

    @model_validator(mode="after")
    def _check_bounds(self) -> "SpaceGrid":
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if self.x_min >= self.x_max:
            raise ValueError("x_min must be below x_max")
        return self

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.M

    def node(self, j: int) -> float:
        """Coordinate of node j (x_M is returned as x_max exactly)"""
        if j == self.M:
            return self.x_max
        return self.x_min + j * self.h

    def nodes(self) -> np.ndarray:
        x = self.x_min + np.arange(self.M + 1) * self.h
        x[-1] = self.x_max
        return x

    def index_of(self, x: float, rtol: float = 1e-9) -> int | None:
        """Index of the node at x, or None when x is not a node"""
        j = round((x - self.x_min) / self.h)
        if 0 <= j <= self.M and abs(self.node(j) - x) <= rtol * max(self.h, abs(x)):
            return j
        return None

    def refined(self) -> "SpaceGrid":
        """Same interval with h halved"""
        return SpaceGrid(x_min=self.x_min, x_max=self.x_max, M=2 * self.M)


class TimeGrid(BaseModel):
    """
    Time mesh over [0, T] with N steps

    In transformed mode the steps are uniform in t~ = sqrt(t) with k = sqrt(T)/N,
    so original times are t_n = (n k)^2. In original mode steps are uniform in t.
    """
    model_config = ConfigDict(frozen=True)

    T: float = Field(gt=0)
    N: int = Field(ge=1)
    mode: TimeMode = TimeMode.TRANSFORMED

    @property
    def k(self) -> float:
        """Transformed step sqrt(T)/N"""
        return math.sqrt(self.T) / self.N

    @property
    def dt(self) -> float:
        """Uniform original-time step T/N (original mode)"""
        return self.T / self.N

    def transformed_time(self, n: int) -> float:
        if self.mode is TimeMode.TRANSFORMED:
            return n * self.k
        return math.sqrt(self.original_time(n))

    def original_time(self, n: int) -> float:
        if self.mode is TimeMode.TRANSFORMED:
            if n == self.N:
                return self.T
            return (n * self.k) ** 2
        if n == self.N:
            return self.T
        return n * self.dt

    def original_step(self, n: int) -> float:
        """Size of step n -> n+1 in the original variable"""
        return self.original_time(n + 1) - self.original_time(n)

    def original_nodes(self) -> np.ndarray:
        return np.array([self.original_time(n) for n in range(self.N + 1)])

    def transformed_nodes(self) -> np.ndarray:
        return np.array([self.transformed_time(n) for n in range(self.N + 1)])

    def refined(self) -> "TimeGrid":
        return TimeGrid(T=self.T, N=2 * self.N, mode=self.mode)


class SchemeSpec(BaseModel):
    """Scheme variant plus mesh ratio lambda = k/h"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    variant: SchemeVariant
    lam: float = Field(gt=0, alias="lambda")
    n_startup: int = Field(default=2, ge=1)

    @property
    def theta_schedule_label(self) -> str:
        if self.variant is SchemeVariant.RANNACHER:
            return f"rannacher({self.n_startup})"
        return self.variant.value


class BSParams(BaseModel):
    """Black-Scholes market and contract parameters"""
    model_config = ConfigDict(frozen=True)

    sigma: float = Field(gt=0)
    r: float
    K: float = Field(gt=0)
    T: float = Field(gt=0)
    payoff: PayoffKind = PayoffKind.CALL

    @property
    def lambda_critical(self) -> float:
        """1/(sigma K sqrt 2), the Black-Scholes analogue of 1/sqrt 2"""
        return 1.0 / (self.sigma * self.K * math.sqrt(2.0))


class PenaltyConfig(BaseModel):
    """Penalty parameter and active-set iteration controls (rho = 0 disables the penalty)"""
    model_config = ConfigDict(frozen=True)

    rho: float = Field(default=1.0e6, ge=0)
    tol: float = Field(default=1.0e-6, gt=0)
    max_iter: int = Field(default=50, ge=1)


@dataclass(frozen=True)
class SolutionField:
    """Values on a SpaceGrid at one time level"""

    grid: SpaceGrid
    values: np.ndarray
    level: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.M + 1,):
            raise ValueError(
                f"field has {values.size} values, grid needs {self.grid.M + 1}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def h(self) -> float:
        return self.grid.h

    def with_values(self, values: np.ndarray, level: int) -> "SolutionField":
        return SolutionField(grid=self.grid, values=values, level=level)

    def mass(self, periodic: bool = True) -> float:
        """h * sum U_j (the duplicate end node is skipped when periodic)"""
        v = self.values[:-1] if periodic else self.values
        return float(self.h * np.sum(v))
