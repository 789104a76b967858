"""
Custom exceptions for grid construction, linear solves and experiments
"""


class TimeChangeError(Exception):
    """Base exception for timechange_cn errors"""
    pass


class GridError(TimeChangeError, ValueError):
    """Invalid space or time grid parameters"""
    pass


class LambdaMismatchError(GridError):
    """Mesh ratio of the scheme does not match k/h of the grids"""
    pass


class DiagonalDominanceError(TimeChangeError):
    """Assembled tridiagonal system is not strictly diagonally dominant"""
    pass


class ZeroPivotError(TimeChangeError):
    """Thomas elimination hit a zero pivot"""
    pass


class RegimeOrderingError(TimeChangeError, ValueError):
    """Wave number regime boundaries are out of order (h too large)"""
    pass


class QuadratureError(TimeChangeError):
    """Adaptive quadrature did not reach the requested tolerance"""
    pass


class PenaltyConvergenceError(TimeChangeError):
    """Active-set iteration exceeded max_iter"""
    pass


class ExperimentConfigError(TimeChangeError, ValueError):
    """Experiment configuration failed validation"""
    pass
