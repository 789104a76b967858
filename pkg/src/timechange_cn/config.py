"""Configuration for the time-changed Crank-Nicolson experiments"""

import os
from pathlib import Path
from typing import Optional


class Config:
    """Single place for all settings"""

    # Output
    OUTPUT_DIR: Path = Path(os.getenv("TIMECHANGE_OUTPUT_DIR", "results"))
    MAX_CONCURRENT: int = int(os.getenv("TIMECHANGE_MAX_CONCURRENT", "4"))

    # Heat equation refinement (k = 0.01 down to N = 3200)
    HEAT_T: float = 1.0
    HEAT_BASE_N: int = 100
    HEAT_LEVELS: int = 6
    HEAT_HALF_WIDTH: float = 10.0

    # Order fitting
    FIT_POINTS: int = 3  # finest levels used by fit_order
    REGIME_EXPONENT: float = 0.3  # diagnostic r < 1/3 for regime I

    # Black-Scholes market and grid (T, S_max give M=3200, N=640 at lambda=0.0125)
    BS_SIGMA: float = 0.2
    BS_RATE: float = 0.05
    BS_STRIKE: float = 100.0
    BS_EXPIRY: float = 0.25
    BS_S_MAX: float = 200.0
    BS_BASE_M: int = 400
    BS_LEVELS: int = 5

    # American put
    PENALTY_RHO: float = 1.0e6
    PENALTY_TOL_FACTOR: float = 1.0e-8  # tol = factor * K
    PENALTY_MAX_ITER: int = 50
    AMERICAN_BASE_M: int = 1600
    AMERICAN_LEVELS: int = 4

    # Rannacher start-up
    RANNACHER_STEPS: int = 2

    # Quadrature
    QUAD_EPSABS: float = 1.0e-12
    QUAD_LIMIT: int = 200

    @classmethod
    def from_env(cls) -> "Config":
        """Create config from environment variables"""
        return cls()

    @classmethod
    def for_testing(cls, output_dir: Optional[Path] = None) -> "Config":
        """Create config for testing"""
        config = cls()
        config.MAX_CONCURRENT = 1
        if output_dir:
            config.OUTPUT_DIR = Path(output_dir)
        return config
