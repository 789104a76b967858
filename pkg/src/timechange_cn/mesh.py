"""
Grid construction and refinement ladders

One refinement level divides both h and k by 2, so lambda = k/h is held fixed.
"""

import logging
import math
from typing import List, Tuple

from .exceptions import GridError, LambdaMismatchError
from .models import SpaceGrid, TimeGrid, TimeMode

logger = logging.getLogger(__name__)

LAMBDA_RTOL = 1e-12


def build_space_grid(x_min: float, x_max: float, M: int) -> SpaceGrid:
    """Uniform grid with M intervals; raises GridError on bad input"""
    if not (math.isfinite(x_min) and math.isfinite(x_max)):
        raise GridError(f"non-finite grid bounds ({x_min}, {x_max})")
    if x_min >= x_max:
        raise GridError(f"x_min={x_min} must be below x_max={x_max}")
    if M < 2:
        raise GridError(f"need at least 2 intervals, got M={M}")
    return SpaceGrid(x_min=x_min, x_max=x_max, M=M)


def build_time_grid(T: float, N: int, mode: TimeMode = TimeMode.TRANSFORMED) -> TimeGrid:
    """Time grid with N steps; k = sqrt(T)/N in transformed mode"""
    if not math.isfinite(T) or T <= 0:
        raise GridError(f"final time must be positive, got T={T}")
    if N < 1:
        raise GridError(f"need at least one time step, got N={N}")
    return TimeGrid(T=T, N=N, mode=mode)


def check_lambda(lam: float, grid: SpaceGrid, tg: TimeGrid, rtol: float = LAMBDA_RTOL) -> None:
    """Raise LambdaMismatchError unless lam == k/h to rtol"""
    ratio = tg.k / grid.h
    if abs(ratio - lam) > rtol * abs(lam):
        raise LambdaMismatchError(
            f"scheme lambda={lam!r} but k/h={ratio!r} (k={tg.k}, h={grid.h})"
        )


def refinement_ladder(
    lam: float,
    levels: int,
    base_N: int = 100,
    half_width: float = 10.0,
    T: float = 1.0,
) -> List[Tuple[SpaceGrid, TimeGrid]]:
    """
    Symmetric heat grids for a refinement study

    Level 0 has N = base_N and h = k/lambda. M is the smallest even number with
    M*h/2 >= half_width, so x = 0 is a node; every level doubles M and N.
    """
    if lam <= 0:
        raise GridError(f"lambda must be positive, got {lam}")
    if levels < 1:
        raise GridError(f"need at least one level, got {levels}")

    k0 = math.sqrt(T) / base_N
    h0 = k0 / lam
    M0 = 2 * math.ceil(half_width / h0 - 1e-9)
    M0 = max(M0, 2)

    ladder = []
    for level in range(levels):
        M = M0 * 2**level
        N = base_N * 2**level
        h = k0 / lam / 2**level
        half = M * h / 2
        grid = build_space_grid(-half, half, M)
        tg = build_time_grid(T, N)
        ladder.append((grid, tg))

    logger.debug(
        "ladder lambda=%s: M %d..%d, N %d..%d, domain +-%.6f",
        lam, M0, ladder[-1][0].M, base_N, ladder[-1][1].N, ladder[0][0].x_max,
    )
    return ladder


def bs_refinement_ladder(
    lam: float,
    levels: int,
    base_M: int,
    S_max: float,
    T: float,
    strike: float,
) -> List[Tuple[SpaceGrid, TimeGrid]]:
    """
    S-grids on [0, S_max] with N = sqrt(T)/(lambda h) transformed steps

    M=3200, S_max=200, T=0.25, lambda=0.0125 gives h=0.0625 and N=640.
    """
    ladder = []
    for level in range(levels):
        M = base_M * 2**level
        grid = build_space_grid(0.0, S_max, M)
        N_exact = math.sqrt(T) / (lam * grid.h)
        N = round(N_exact)
        if N < 1 or abs(N - N_exact) > 1e-6 * N_exact:
            raise LambdaMismatchError(
                f"lambda={lam} with M={M} needs N={N_exact:.6f} steps, not an integer"
            )
        if grid.index_of(strike) is None:
            raise GridError(f"strike {strike} is not a node of the M={M} grid")
        ladder.append((grid, build_time_grid(T, N)))
    return ladder


def compatible_base_m(
    lam: float,
    base_M: int,
    S_max: float,
    T: float,
    strike: float,
    search: int = 1000,
) -> int:
    """
    Smallest M >= base_M whose S-grid holds the strike and gives integer N

    Doubling keeps both properties, so the whole bs_refinement_ladder from
    the returned M is valid. lambda=0.035 on [0, 200] with T=0.25 moves
    M=400 to M=406 (N=29).
    """
    if lam <= 0:
        raise GridError(f"lambda must be positive, got {lam}")
    for M in range(base_M, base_M + search):
        N_exact = math.sqrt(T) * M / (lam * S_max)
        N = round(N_exact)
        if N < 1 or abs(N - N_exact) > 1e-6 * N_exact:
            continue
        if build_space_grid(0.0, S_max, M).index_of(strike) is not None:
            return M
    raise LambdaMismatchError(
        f"no M in [{base_M}, {base_M + search}) fits lambda={lam} with the strike on grid"
    )
