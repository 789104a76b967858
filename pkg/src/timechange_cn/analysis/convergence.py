"""
Convergence studies

Runs a problem on a refinement ladder (h and k halved together), measures the
per-level error and fits the convergence order from the finest levels.
"""

import asyncio
import copy
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from ..config import Config
from ..exceptions import GridError
from ..mesh import bs_refinement_ladder, compatible_base_m, refinement_ladder
from ..models import BSParams, PayoffKind, PenaltyConfig, SchemeSpec, SchemeVariant
from ..solvers.american import atm_quantities, solve_american_put, successive_ratio, table_row_ratios
from ..solvers.blackscholes import bs_gamma_error, solve_european
from ..solvers.heat import max_norm_error, node_error, solve_heat

logger = logging.getLogger(__name__)

T = TypeVar("T")


class Problem(str, Enum):
    """Refinement study targets"""
    HEAT = "heat"
    BS_GAMMA = "bs_gamma"
    AMERICAN = "american"


@dataclass(frozen=True)
class LevelError:
    """One rung of a refinement study"""
    level: int
    h: float
    k: float
    error: float


@dataclass
class ConvergenceReport:
    """Per-level errors, their successive ratios and the fitted order"""

    problem: Problem
    lam: float
    levels: List[LevelError] = field(default_factory=list)
    fitted_order: float = float("nan")
    ratios: List[float] = field(default_factory=list)
    # american only: (M, N, value ratio, delta ratio, gamma ratio)
    table: List[Tuple[int, int, float, float, float]] = field(default_factory=list)

    @property
    def log2_mean_ratio(self) -> float:
        if not self.ratios:
            return float("nan")
        return math.log2(float(np.mean(self.ratios)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "problem": self.problem.value,
            "lambda": self.lam,
            "fitted_order": self.fitted_order,
            "ratios": list(self.ratios),
            "levels": [
                {"level": e.level, "h": e.h, "k": e.k, "error": e.error}
                for e in self.levels
            ],
            "table": [list(row) for row in self.table],
        }


def fit_order(levels: Sequence[Tuple[float, float]], points: Optional[int] = None) -> float:
    """
    Least-squares slope of log(error) against log(h)

    Only the `points` finest levels enter the fit (Config.FIT_POINTS by
    default); pass points=len(levels) to use them all.
    """
    if points is None:
        points = Config.FIT_POINTS
    if len(levels) < 3:
        raise ValueError(f"need at least 3 levels to fit an order, got {len(levels)}")
    if points < 3:
        raise ValueError("fit window must hold at least 3 levels")

    finest = sorted(levels, key=lambda he: he[0])[:points]
    h = np.array([he[0] for he in finest], dtype=float)
    err = np.array([he[1] for he in finest], dtype=float)
    if np.any(err <= 0) or not np.all(np.isfinite(err)):
        raise ValueError("errors must be positive and finite to fit an order")

    slope, _ = np.polyfit(np.log(h), np.log(err), 1)
    return float(slope)


async def run_levels(
    jobs: Sequence[Callable[[], T]],
    max_concurrent: int = 4,
) -> List[T]:
    """Run independent blocking jobs in worker threads; results keep job order"""
    semaphore = asyncio.Semaphore(max_concurrent)

    async def run_with_semaphore(job: Callable[[], T]) -> T:
        async with semaphore:
            return await asyncio.to_thread(job)

    return list(await asyncio.gather(*[run_with_semaphore(job) for job in jobs]))


def _timed(label: str, job: Callable[[], T]) -> Callable[[], T]:
    def wrapper() -> T:
        start = time.perf_counter()
        result = job()
        logger.info("%s done in %.2fs", label, time.perf_counter() - start)
        return result
    return wrapper


def _heat_jobs(lam: float, levels: int, config: Config, variant: SchemeVariant):
    scheme = SchemeSpec(variant=variant, lam=lam, n_startup=config.RANNACHER_STEPS)
    ladder = refinement_ladder(
        lam, levels, config.HEAT_BASE_N, config.HEAT_HALF_WIDTH, config.HEAT_T
    )

    def make(grid, tg):
        return lambda: max_norm_error(solve_heat(scheme, grid, tg), tg.T)

    jobs = [
        _timed(f"heat {variant.value} lambda={lam} M={g.M} N={tg.N}", make(g, tg))
        for g, tg in ladder
    ]
    return ladder, jobs


def _bs_params(config: Config, payoff: PayoffKind = PayoffKind.CALL) -> BSParams:
    return BSParams(
        sigma=config.BS_SIGMA, r=config.BS_RATE, K=config.BS_STRIKE,
        T=config.BS_EXPIRY, payoff=payoff,
    )


def _bs_jobs(lam: float, levels: int, config: Config):
    p = _bs_params(config)
    ladder = bs_refinement_ladder(
        lam, levels, config.BS_BASE_M, config.BS_S_MAX, config.BS_EXPIRY, config.BS_STRIKE
    )

    def make(grid, tg):
        return lambda: bs_gamma_error(solve_european(p, grid, tg), p)

    jobs = [_timed(f"bs gamma lambda={lam} M={g.M} N={tg.N}", make(g, tg)) for g, tg in ladder]
    return ladder, jobs


def _american_jobs(lam: float, levels: int, config: Config):
    p = _bs_params(config, PayoffKind.PUT)
    cfg = PenaltyConfig(
        rho=config.PENALTY_RHO,
        tol=config.PENALTY_TOL_FACTOR * config.BS_STRIKE,
        max_iter=config.PENALTY_MAX_ITER,
    )
    ladder = bs_refinement_ladder(
        lam, levels, config.AMERICAN_BASE_M, config.BS_S_MAX, config.BS_EXPIRY, config.BS_STRIKE
    )

    def make(grid, tg):
        def job():
            V, stats = solve_american_put(p, grid, tg, cfg)
            logger.debug("M=%d N=%d penalty %s", grid.M, tg.N, stats.to_dict())
            return atm_quantities(V, p)
        return job

    jobs = [_timed(f"american lambda={lam} M={g.M} N={tg.N}", make(g, tg)) for g, tg in ladder]
    return ladder, jobs


async def refine_study_async(
    problem: Problem,
    lam: float,
    levels: int,
    config: Optional[Config] = None,
    variant: SchemeVariant = SchemeVariant.CN_TIMECHANGED,
) -> ConvergenceReport:
    """
    Refinement study with levels solved concurrently

    heat and bs_gamma measure errors against the analytic solution; american
    uses successive differences of the ATM value, so it needs 3+ levels.
    """
    config = config or Config.from_env()
    problem = Problem(problem)
    if levels < 2:
        raise GridError(f"a refinement study needs at least 2 levels, got {levels}")

    if problem is Problem.HEAT:
        ladder, jobs = _heat_jobs(lam, levels, config, variant)
    elif problem is Problem.BS_GAMMA:
        ladder, jobs = _bs_jobs(lam, levels, config)
    else:
        if levels < 3:
            raise GridError("the american study needs at least 3 levels")
        ladder, jobs = _american_jobs(lam, levels, config)

    results = await run_levels(jobs, config.MAX_CONCURRENT)
    report = ConvergenceReport(problem=problem, lam=lam)

    if problem is Problem.AMERICAN:
        values = [r[0] for r in results]
        report.levels = [
            LevelError(i, g.h, tg.k, abs(values[i] - values[i + 1]))
            for i, (g, tg) in enumerate(ladder[:-1])
        ]
        report.ratios = [
            successive_ratio(values[i], values[i + 1], values[i + 2])
            for i in range(len(values) - 2)
        ]
        for i in range(len(results) - 2):
            g, tg = ladder[i + 1]
            report.table.append((g.M, tg.N, *table_row_ratios(results[i:i + 3])))
    else:
        report.levels = [
            LevelError(i, g.h, tg.k, float(err))
            for i, ((g, tg), err) in enumerate(zip(ladder, results))
        ]
        errors = [e.error for e in report.levels]
        report.ratios = [
            errors[i] / errors[i + 1] for i in range(len(errors) - 1) if errors[i + 1] > 0
        ]

    if len(report.levels) >= 3:
        report.fitted_order = fit_order([(e.h, e.error) for e in report.levels])

    for e in report.levels:
        logger.info("%s level %d: h=%.6g k=%.6g error=%.6e", problem.value, e.level, e.h, e.k, e.error)
    logger.info("%s lambda=%s fitted order %.4f", problem.value, lam, report.fitted_order)
    return report


def refine_study(
    problem: Problem,
    lam: float,
    levels: int,
    config: Optional[Config] = None,
    variant: SchemeVariant = SchemeVariant.CN_TIMECHANGED,
) -> ConvergenceReport:
    """Blocking wrapper around refine_study_async"""
    return asyncio.run(refine_study_async(problem, lam, levels, config, variant))


async def bs_order_sweep_async(
    lambdas: Sequence[float],
    levels: int,
    config: Optional[Config] = None,
) -> List[ConvergenceReport]:
    """
    bs_gamma refinement study for each lambda, in the order given

    Each lambda starts from the smallest S-grid at or above Config.BS_BASE_M
    that keeps N integer and the strike on a node.
    """
    config = config or Config.from_env()
    reports = []
    for lam in lambdas:
        cfg = copy.copy(config)
        cfg.BS_BASE_M = compatible_base_m(
            lam, config.BS_BASE_M, config.BS_S_MAX, config.BS_EXPIRY, config.BS_STRIKE
        )
        if cfg.BS_BASE_M != config.BS_BASE_M:
            logger.info("lambda=%s: base M %d -> %d", lam, config.BS_BASE_M, cfg.BS_BASE_M)
        reports.append(await refine_study_async(Problem.BS_GAMMA, lam, levels, cfg))
    return reports


def rannacher_measured_ratio(lam: float, level: int = 0, config: Optional[Config] = None) -> float:
    """
    E_R / E_TC at x = 0 from time-domain solves on one ladder level

    Rannacher takes uniform steps T/N with backward Euler start-up; the
    time-changed scheme takes the same number of steps in sqrt(t).
    """
    config = config or Config.from_env()
    grid, tg = refinement_ladder(
        lam, level + 1, config.HEAT_BASE_N, config.HEAT_HALF_WIDTH, config.HEAT_T
    )[level]
    rannacher = SchemeSpec(
        variant=SchemeVariant.RANNACHER, lam=lam, n_startup=config.RANNACHER_STEPS
    )
    timechanged = SchemeSpec(variant=SchemeVariant.CN_TIMECHANGED, lam=lam)
    e_r = node_error(solve_heat(rannacher, grid, tg), tg.T)
    e_tc = node_error(solve_heat(timechanged, grid, tg), tg.T)
    if e_tc == 0.0:
        raise ZeroDivisionError("time-changed error vanished at x = 0")
    return e_r / e_tc
