"""
Experiment definitions

Each experiment validates its parameters with a pydantic schema, runs its
studies, and returns an ExperimentResult holding the CSV rows plus the
headline metric checked against the experiment's acceptance band.
"""

import copy
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Awaitable, Callable, Dict, List, Optional, Tuple, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..analysis.convergence import (
    Problem,
    bs_order_sweep_async,
    rannacher_measured_ratio,
    refine_study_async,
)
from ..analysis.symbol import (
    LAMBDA_CRITICAL,
    cost_constrained_errors,
    dft_of_field,
    error_ratio_rannacher_tc,
    regime_partition,
    symbol_on_grid,
    theoretical_order,
)
from ..config import Config
from ..exceptions import ExperimentConfigError
from ..mesh import refinement_ladder
from ..models import BSParams, SchemeSpec, SchemeVariant
from ..solvers.blackscholes import predicted_bs_order
from ..solvers.heat import solve_heat
from ..solvers.tridiag import Boundary

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = [0.4, 0.5, 0.6, LAMBDA_CRITICAL, 0.9, 1.0, 1.25]
DEFAULT_BS_LAMBDAS = [0.0125, 0.025, 0.035, 0.05]
SYMBOL_TOLERANCE = 1e-10
BS_ORDER_DEVIATION = 0.4


class ExperimentName(str, Enum):
    HEAT_CONVERGENCE = "heat_convergence"
    ORDER_VS_LAMBDA = "order_vs_lambda"
    SYMBOL_CHECK = "symbol_check"
    REGIME_REPORT = "regime_report"
    RANNACHER_COMPARE = "rannacher_compare"
    COST_COMPARE = "cost_compare"
    BS_GAMMA = "bs_gamma"
    BS_ORDER_VS_LAMBDA = "bs_order_vs_lambda"
    AMERICAN_TABLE = "american_table"


CSV_HEADERS: Dict[ExperimentName, Tuple[str, ...]] = {
    ExperimentName.HEAT_CONVERGENCE: ("level", "h", "k", "max_error"),
    ExperimentName.ORDER_VS_LAMBDA: ("lambda", "fitted_order", "theoretical_order"),
    ExperimentName.SYMBOL_CHECK: ("s", "xi", "symbol", "dft", "rel_err"),
    ExperimentName.REGIME_REPORT: ("regime", "s_min", "s_max", "xi_min", "xi_max"),
    ExperimentName.RANNACHER_COMPARE: ("lambda", "ratio_analytic", "ratio_measured"),
    ExperimentName.COST_COMPARE: ("lambda", "e_r", "e_tc"),
    ExperimentName.BS_GAMMA: ("level", "h", "gamma_error"),
    ExperimentName.BS_ORDER_VS_LAMBDA: ("lambda", "fitted_order", "predicted_order"),
    ExperimentName.AMERICAN_TABLE: ("M", "N", "ratio_value", "ratio_delta", "ratio_gamma"),
}


# Parameter schemas

class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)


class HeatConvergenceParams(_Params):
    lam: float = Field(default=0.5, gt=0, alias="lambda")
    levels: int = Field(default=Config.HEAT_LEVELS, ge=3, le=10)
    variant: SchemeVariant = SchemeVariant.CN_TIMECHANGED


class OrderVsLambdaParams(_Params):
    lambdas: List[float] = Field(default_factory=lambda: list(DEFAULT_LAMBDAS), min_length=1)
    levels: int = Field(default=Config.HEAT_LEVELS, ge=3, le=10)


class SymbolCheckParams(_Params):
    N: int = Field(default=200, ge=1)
    lam: float = Field(default=0.5, gt=0, alias="lambda")


class RegimeReportParams(_Params):
    N: int = Field(default=3200, ge=2)
    lam: float = Field(default=0.5, gt=0, alias="lambda")
    r: float = Field(default=Config.REGIME_EXPONENT, gt=0, lt=1.0 / 3.0)


class RannacherCompareParams(_Params):
    lambdas: List[float] = Field(
        default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, LAMBDA_CRITICAL], min_length=1
    )
    level: int = Field(default=0, ge=0, le=4)


class CostCompareParams(_Params):
    lambdas: List[float] = Field(
        default_factory=lambda: [round(0.1 * i, 10) for i in range(2, 16)], min_length=1
    )


class _BSMarket(_Params):
    sigma: float = Field(default=Config.BS_SIGMA, gt=0)
    r: float = Config.BS_RATE
    K: float = Field(default=Config.BS_STRIKE, gt=0)
    T: float = Field(default=Config.BS_EXPIRY, gt=0)
    s_max: float = Field(default=Config.BS_S_MAX, gt=0)


class BSGammaParams(_BSMarket):
    lam: float = Field(default=0.0125, gt=0, alias="lambda")
    levels: int = Field(default=Config.BS_LEVELS, ge=3, le=8)
    base_m: int = Field(default=Config.BS_BASE_M, ge=4)


class BSOrderVsLambdaParams(_BSMarket):
    lambdas: List[float] = Field(
        default_factory=lambda: list(DEFAULT_BS_LAMBDAS), min_length=1
    )
    levels: int = Field(default=Config.BS_LEVELS, ge=3, le=8)
    base_m: int = Field(default=Config.BS_BASE_M, ge=4)


class AmericanTableParams(_BSMarket):
    lam: float = Field(default=0.0125, gt=0, alias="lambda")
    levels: int = Field(default=Config.AMERICAN_LEVELS, ge=3, le=7)
    base_m: int = Field(default=Config.AMERICAN_BASE_M, ge=4)
    rho: float = Field(default=Config.PENALTY_RHO, ge=0)


PARAM_SCHEMAS: Dict[ExperimentName, Type[_Params]] = {
    ExperimentName.HEAT_CONVERGENCE: HeatConvergenceParams,
    ExperimentName.ORDER_VS_LAMBDA: OrderVsLambdaParams,
    ExperimentName.SYMBOL_CHECK: SymbolCheckParams,
    ExperimentName.REGIME_REPORT: RegimeReportParams,
    ExperimentName.RANNACHER_COMPARE: RannacherCompareParams,
    ExperimentName.COST_COMPARE: CostCompareParams,
    ExperimentName.BS_GAMMA: BSGammaParams,
    ExperimentName.BS_ORDER_VS_LAMBDA: BSOrderVsLambdaParams,
    ExperimentName.AMERICAN_TABLE: AmericanTableParams,
}


class ExperimentConfig(BaseModel):
    """Experiment name plus its raw parameter map"""
    model_config = ConfigDict(frozen=True)

    experiment: ExperimentName
    parameters: Dict[str, Any] = Field(default_factory=dict)

    def validated(self) -> _Params:
        """Parameters checked against the experiment's schema"""
        schema = PARAM_SCHEMAS[self.experiment]
        try:
            return schema.model_validate(self.parameters)
        except ValidationError as e:
            raise ExperimentConfigError(
                f"invalid parameters for {self.experiment.value}: {e}"
            ) from e


@dataclass
class ExperimentResult:
    """Rows for the CSV file plus the headline metric and its acceptance check"""

    experiment: ExperimentName
    rows: List[Tuple[Any, ...]] = field(default_factory=list)
    metric_name: str = ""
    metric: float = float("nan")
    band: Optional[Tuple[float, float]] = None
    passed: Optional[bool] = None
    elapsed: float = 0.0
    notes: List[str] = field(default_factory=list)

    @property
    def header(self) -> Tuple[str, ...]:
        return CSV_HEADERS[self.experiment]

    def check(self, value: float, band: Tuple[float, float]) -> bool:
        ok = band[0] <= value <= band[1]
        self.passed = ok if self.passed is None else (self.passed and ok)
        return ok


def heat_order_band(lam: float) -> Tuple[float, float]:
    """Acceptance band for the fitted heat order at lambda"""
    order = theoretical_order(lam)
    if order == 2.0:
        return (1.8, 2.2)
    # sqrt(log 1/h) factors bias the measured slope upward
    return (order - 0.15, order + 0.25)


def bs_order_band(lam: float, p: BSParams) -> Tuple[float, float]:
    order = predicted_bs_order(lam, p)
    if order == 2.0:
        return (1.7, 2.3)
    return (order - 0.3, order + 0.4)


def _with_market(config: Config, params: _BSMarket) -> Config:
    cfg = copy.copy(config)
    cfg.BS_SIGMA = params.sigma
    cfg.BS_RATE = params.r
    cfg.BS_STRIKE = params.K
    cfg.BS_EXPIRY = params.T
    cfg.BS_S_MAX = params.s_max
    return cfg


def _market(params: _BSMarket) -> BSParams:
    return BSParams(sigma=params.sigma, r=params.r, K=params.K, T=params.T)


async def _heat_convergence(params: HeatConvergenceParams, config: Config) -> ExperimentResult:
    report = await refine_study_async(
        Problem.HEAT, params.lam, params.levels, config, variant=params.variant
    )
    result = ExperimentResult(ExperimentName.HEAT_CONVERGENCE)
    result.rows = [(e.level, e.h, e.k, e.error) for e in report.levels]
    result.metric_name = "fitted_order"
    result.metric = report.fitted_order

    if params.variant is SchemeVariant.CN_TIMECHANGED:
        result.band = heat_order_band(params.lam)
        result.check(report.fitted_order, result.band)
    elif params.variant is SchemeVariant.CN_ORIGINAL:
        errors = [e.error for e in report.levels]
        if errors[-1] > min(errors[:-1]):
            result.notes.append("error grows under refinement")
    return result


async def _order_vs_lambda(params: OrderVsLambdaParams, config: Config) -> ExperimentResult:
    result = ExperimentResult(ExperimentName.ORDER_VS_LAMBDA, metric_name="max_abs_deviation")
    deviations = []
    for lam in params.lambdas:
        report = await refine_study_async(Problem.HEAT, lam, params.levels, config)
        expected = theoretical_order(lam)
        result.rows.append((lam, report.fitted_order, expected))
        deviations.append(abs(report.fitted_order - expected))
    result.metric = max(deviations)
    result.band = (0.0, 0.3)
    result.check(result.metric, result.band)
    return result


async def _symbol_check(params: SymbolCheckParams, config: Config) -> ExperimentResult:
    grid, tg = refinement_ladder(params.lam, 1, params.N, config.HEAT_HALF_WIDTH, config.HEAT_T)[0]
    scheme = SchemeSpec(variant=SchemeVariant.CN_TIMECHANGED, lam=params.lam)
    field_ = solve_heat(scheme, grid, tg, boundary=Boundary.periodic())

    s, dft = dft_of_field(field_)
    _, xi, symbol = symbol_on_grid(field_, params.lam, params.N)
    # relative to the peak transform value U(0) = 1
    rel_err = np.abs(symbol - dft)

    result = ExperimentResult(ExperimentName.SYMBOL_CHECK, metric_name="max_rel_err")
    result.rows = list(zip(s.tolist(), xi.tolist(), symbol.tolist(), dft.tolist(), rel_err.tolist()))
    result.metric = float(np.max(rel_err))
    result.band = (0.0, SYMBOL_TOLERANCE)
    result.check(result.metric, result.band)
    return result


async def _regime_report(params: RegimeReportParams, config: Config) -> ExperimentResult:
    h = math.sqrt(config.HEAT_T) / (params.N * params.lam)
    partition = regime_partition(h, params.lam, params.r, params.N)
    result = ExperimentResult(ExperimentName.REGIME_REPORT, metric_name="m_star")
    result.rows = [tuple(row) for row in partition.bands()]
    result.metric = float(partition.m_star)
    return result


async def _rannacher_compare(params: RannacherCompareParams, config: Config) -> ExperimentResult:
    result = ExperimentResult(ExperimentName.RANNACHER_COMPARE, metric_name="ratio_at_critical")
    for lam in params.lambdas:
        analytic = error_ratio_rannacher_tc(lam)
        measured = rannacher_measured_ratio(lam, params.level, config)
        result.rows.append((lam, analytic, measured))
    result.metric = error_ratio_rannacher_tc(LAMBDA_CRITICAL)
    return result


async def _cost_compare(params: CostCompareParams, config: Config) -> ExperimentResult:
    result = ExperimentResult(ExperimentName.COST_COMPARE, metric_name="lambda_star_rannacher")
    for lam in params.lambdas:
        c = cost_constrained_errors(lam)
        result.rows.append((lam, c.e_r, c.e_tc))
    best = cost_constrained_errors(LAMBDA_CRITICAL)
    result.metric = best.lambda_star_r
    result.band = (0.7554, 0.7564)
    result.check(result.metric, result.band)
    e_r_best = cost_constrained_errors(best.lambda_star_r).e_r
    if not best.e_tc < e_r_best:
        result.passed = False
    result.notes.append(f"E_TC(1/sqrt 2)={best.e_tc:.6f} vs E_R(lambda*_R)={e_r_best:.6f}")
    return result


async def _bs_gamma(params: BSGammaParams, config: Config) -> ExperimentResult:
    cfg = _with_market(config, params)
    cfg.BS_BASE_M = params.base_m
    report = await refine_study_async(Problem.BS_GAMMA, params.lam, params.levels, cfg)
    result = ExperimentResult(ExperimentName.BS_GAMMA, metric_name="fitted_order")
    result.rows = [(e.level, e.h, e.error) for e in report.levels]
    result.metric = report.fitted_order
    result.band = bs_order_band(params.lam, _market(params))
    result.check(result.metric, result.band)
    return result


async def _bs_order_vs_lambda(params: BSOrderVsLambdaParams, config: Config) -> ExperimentResult:
    cfg = _with_market(config, params)
    cfg.BS_BASE_M = params.base_m
    p = _market(params)
    reports = await bs_order_sweep_async(params.lambdas, params.levels, cfg)

    result = ExperimentResult(ExperimentName.BS_ORDER_VS_LAMBDA, metric_name="max_abs_deviation")
    for report in reports:
        result.rows.append((report.lam, report.fitted_order, predicted_bs_order(report.lam, p)))
    result.metric = max(abs(fitted - expected) for _, fitted, expected in result.rows)
    result.band = (0.0, BS_ORDER_DEVIATION)
    result.check(result.metric, result.band)
    return result


async def _american_table(params: AmericanTableParams, config: Config) -> ExperimentResult:
    cfg = _with_market(config, params)
    cfg.AMERICAN_BASE_M = params.base_m
    cfg.PENALTY_RHO = params.rho
    report = await refine_study_async(Problem.AMERICAN, params.lam, params.levels, cfg)

    result = ExperimentResult(ExperimentName.AMERICAN_TABLE)
    result.rows = list(report.table)
    below_critical = params.lam <= _market(params).lambda_critical
    if below_critical:
        column, result.band = 2, (3.8, 4.1)
        result.metric_name = "min_value_ratio"
    else:
        column, result.band = 4, (1.9, 2.2)
        result.metric_name = "min_gamma_ratio"
    ratios = [row[column] for row in report.table]
    result.metric = min(ratios)
    for ratio in ratios:
        result.check(ratio, result.band)
    return result


RUNNERS: Dict[ExperimentName, Callable[[Any, Config], Awaitable[ExperimentResult]]] = {
    ExperimentName.HEAT_CONVERGENCE: _heat_convergence,
    ExperimentName.ORDER_VS_LAMBDA: _order_vs_lambda,
    ExperimentName.SYMBOL_CHECK: _symbol_check,
    ExperimentName.REGIME_REPORT: _regime_report,
    ExperimentName.RANNACHER_COMPARE: _rannacher_compare,
    ExperimentName.COST_COMPARE: _cost_compare,
    ExperimentName.BS_GAMMA: _bs_gamma,
    ExperimentName.BS_ORDER_VS_LAMBDA: _bs_order_vs_lambda,
    ExperimentName.AMERICAN_TABLE: _american_table,
}


async def run_experiment(
    experiment: ExperimentConfig, config: Optional[Config] = None
) -> ExperimentResult:
    """Validate parameters, then run the experiment"""
    config = config or Config.from_env()
    params = experiment.validated()
    logger.info("running %s with %s", experiment.experiment.value, params.model_dump(by_alias=True))

    start = time.perf_counter()
    result = await RUNNERS[experiment.experiment](params, config)
    result.elapsed = time.perf_counter() - start
    return result
