"""
CLI runner for the experiments

Usage:
    timechange-cn heat_convergence --lambda 0.5 --levels 6
    timechange-cn order_vs_lambda --lambdas 0.4,0.5,0.7071,1.0,1.25 --levels 6
    timechange-cn symbol_check --N 200 --lambda 0.5
    timechange-cn bs_order_vs_lambda --lambdas 0.0125,0.025,0.035,0.05
    timechange-cn american_table --lambda 0.0125 --levels 5 --output results/
    python -m timechange_cn.experiments.run bs_gamma --config bs.json --verbose

Exit codes: 0 success, 2 acceptance band missed, 1 error.
"""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from ..config import Config
from ..exceptions import ExperimentConfigError
from .reporters import ConsoleReporter, CSVReporter
from .runner import ExperimentConfig, ExperimentName, run_experiment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BAND_FAILED = 2

_COMMON_KEYS = ("config", "output", "verbose")


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1 (2 means a missed band)"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def float_list(text: str) -> List[float]:
    """'0.4,0.5,1' -> [0.4, 0.5, 1.0]"""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_market(p: argparse.ArgumentParser):
    p.add_argument("--sigma", type=float, help="Volatility")
    p.add_argument("--r", type=float, help="Risk-free rate")
    p.add_argument("--K", type=float, help="Strike (must be a grid node)")
    p.add_argument("--T", type=float, help="Expiry in years")
    p.add_argument("--s-max", dest="s_max", type=float, help="Upper end of the S-grid")
    p.add_argument("--base-m", dest="base_m", type=int, help="Intervals on the coarsest S-grid")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=Path, help="JSON file of parameters; flags override it")
    common.add_argument("--output", type=Path, help="Directory for <experiment>.csv")
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    parser = _Parser(
        prog="timechange-cn",
        description="Time-changed Crank-Nicolson experiments",
    )
    sub = parser.add_subparsers(dest="experiment", required=True, parser_class=_Parser)

    def add(name: ExperimentName, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(
            name.value, help=help_text, parents=[common],
            argument_default=argparse.SUPPRESS,
        )

    p = add(ExperimentName.HEAT_CONVERGENCE, "Heat equation refinement study")
    p.add_argument("--lambda", dest="lambda", type=float, help="Mesh ratio k/h")
    p.add_argument("--levels", type=int, help="Refinement levels")
    p.add_argument("--variant", choices=["cn_original", "cn_timechanged", "backward_euler", "rannacher"])

    p = add(ExperimentName.ORDER_VS_LAMBDA, "Fitted order against lambda")
    p.add_argument("--lambdas", type=float_list, help="Comma-separated mesh ratios")
    p.add_argument("--levels", type=int, help="Refinement levels per lambda")

    p = add(ExperimentName.SYMBOL_CHECK, "Symbol product against the DFT of a periodic solve")
    p.add_argument("--N", type=int, help="Time steps")
    p.add_argument("--lambda", dest="lambda", type=float, help="Mesh ratio k/h")

    p = add(ExperimentName.REGIME_REPORT, "Wave number regime boundaries")
    p.add_argument("--N", type=int, help="Time steps (h = 1/(N lambda))")
    p.add_argument("--lambda", dest="lambda", type=float, help="Mesh ratio k/h")
    p.add_argument("--r", type=float, help="Regime I exponent, below 1/3")

    p = add(ExperimentName.RANNACHER_COMPARE, "Rannacher against time-changed error ratio")
    p.add_argument("--lambdas", type=float_list, help="Comma-separated mesh ratios <= 1/sqrt(2)")
    p.add_argument("--level", type=int, help="Ladder level for the measured ratio")

    p = add(ExperimentName.COST_COMPARE, "Errors at fixed computational cost")
    p.add_argument("--lambdas", type=float_list, help="Comma-separated mesh ratios")

    p = add(ExperimentName.BS_GAMMA, "Black-Scholes ATM gamma convergence")
    p.add_argument("--lambda", dest="lambda", type=float, help="Mesh ratio k/h in (sqrt tau, S)")
    p.add_argument("--levels", type=int, help="Refinement levels")
    _add_market(p)

    p = add(ExperimentName.BS_ORDER_VS_LAMBDA, "Fitted gamma order against lambda")
    p.add_argument("--lambdas", type=float_list, help="Comma-separated mesh ratios k/h")
    p.add_argument("--levels", type=int, help="Refinement levels per lambda")
    _add_market(p)

    p = add(ExperimentName.AMERICAN_TABLE, "American put successive-difference ratios")
    p.add_argument("--lambda", dest="lambda", type=float, help="Mesh ratio k/h in (sqrt tau, S)")
    p.add_argument("--levels", type=int, help="Refinement levels (rows = levels - 2)")
    p.add_argument("--rho", type=float, help="Penalty parameter")
    _add_market(p)

    return parser


def load_config_file(path: Path) -> Dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ExperimentConfigError(f"cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ExperimentConfigError(f"config file {path} must hold a JSON object")
    return data


def build_experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    """File values first, then the flags actually given on the command line"""
    given = {k: v for k, v in vars(args).items() if k not in _COMMON_KEYS and k != "experiment"}
    parameters: Dict[str, Any] = {}
    if getattr(args, "config", None):
        parameters.update(load_config_file(args.config))
    parameters.update(given)
    return ExperimentConfig(experiment=args.experiment, parameters=parameters)


def main(argv: Optional[List[str]] = None):
    """CLI entry point"""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    config = Config.from_env()
    output_dir = getattr(args, "output", None) or config.OUTPUT_DIR

    try:
        experiment = build_experiment_config(args)
        experiment.validated()
        result = asyncio.run(run_experiment(experiment, config))
        csv_path = CSVReporter.report(result, output_dir)
        ConsoleReporter.report(result, csv_path)
    except ExperimentConfigError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        sys.exit(EXIT_ERROR)
    except KeyboardInterrupt:
        print("\nExperiment cancelled by user", file=sys.stderr)
        sys.exit(EXIT_ERROR)
    except Exception as e:
        logger.exception("experiment failed")
        print(f"error: {e}", file=sys.stderr)
        sys.exit(EXIT_ERROR)

    sys.exit(EXIT_BAND_FAILED if result.passed is False else EXIT_OK)


if __name__ == "__main__":
    main()
