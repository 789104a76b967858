"""
Analysis of the time-changed scheme

- Fourier symbol product, wave number regimes and their error estimates
- Convergence studies over refinement ladders
"""

from .symbol import symbol_product, regime_partition, RegimePartition
from .convergence import ConvergenceReport, Problem, fit_order, refine_study

__all__ = [
    "symbol_product",
    "regime_partition",
    "RegimePartition",
    "ConvergenceReport",
    "Problem",
    "fit_order",
    "refine_study",
]
