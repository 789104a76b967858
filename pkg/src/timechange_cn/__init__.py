"""
Time-changed Crank-Nicolson schemes

Square-root time change for the heat equation with Dirac data, its Fourier
symbol analysis, and the Black-Scholes European and American (penalty) solvers
built on the same step.
"""

from .config import Config
from .models import (
    BSParams,
    PayoffKind,
    PenaltyConfig,
    SchemeSpec,
    SchemeVariant,
    SolutionField,
    SpaceGrid,
    TimeGrid,
    TimeMode,
)

__version__ = "0.1.0"

__all__ = [
    "Config",
    "BSParams",
    "PayoffKind",
    "PenaltyConfig",
    "SchemeSpec",
    "SchemeVariant",
    "SolutionField",
    "SpaceGrid",
    "TimeGrid",
    "TimeMode",
]
