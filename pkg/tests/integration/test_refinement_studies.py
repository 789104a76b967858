"""Full refinement studies against analytic orders and reference ratios."""

import asyncio
import math

import pytest

from timechange_cn.analysis.convergence import fit_order
from timechange_cn.analysis.symbol import (
    LAMBDA_CRITICAL,
    cost_constrained_errors,
    error_ratio_rannacher_tc,
    measured_regime4_exponent,
    regime4_exponent,
    regime_band_errors,
)
from timechange_cn.config import Config
from timechange_cn.experiments.runner import ExperimentConfig, run_experiment

pytestmark = [pytest.mark.integration, pytest.mark.slow]


@pytest.fixture
def config(tmp_path):
    config = Config.for_testing(output_dir=tmp_path)
    config.MAX_CONCURRENT = 4
    return config


def run(experiment, parameters, config):
    return asyncio.run(
        run_experiment(ExperimentConfig(experiment=experiment, parameters=parameters), config)
    )


class TestHeatConvergence:
    def test_second_order_below_critical_lambda(self, config):
        result = run("heat_convergence", {"lambda": 0.5, "levels": 6}, config)
        assert 1.8 <= result.metric <= 2.2
        assert result.passed is True

    def test_first_order_at_lambda_one(self, config):
        result = run("heat_convergence", {"lambda": 1.0, "levels": 6}, config)
        assert 0.85 <= result.metric <= 1.25

    def test_order_against_lambda(self, config):
        result = run("order_vs_lambda", {"levels": 6}, config)
        for lam, fitted, expected in result.rows:
            assert abs(fitted - expected) <= 0.3, f"lambda={lam}"

    def test_plain_crank_nicolson_error_grows(self, config):
        result = run("heat_convergence", {"lambda": 1.0, "levels": 6, "variant": "cn_original"}, config)
        errors = [row[3] for row in result.rows]
        assert errors[-1] > min(errors[:-1])
        assert "error grows under refinement" in result.notes


class TestSymbolOracle:
    @pytest.mark.parametrize("N", [100, 200, 400])
    @pytest.mark.parametrize("lam", [0.25, 0.5, LAMBDA_CRITICAL, 1.0])
    def test_symbol_matches_dft(self, config, N, lam):
        result = run("symbol_check", {"N": N, "lambda": lam}, config)
        assert result.metric <= 1e-10


class TestAnalyticComparisons:
    @pytest.mark.parametrize("lam", [1.0, LAMBDA_CRITICAL])
    def test_regime4_slope_at_nyquist(self, lam):
        xi = 2.0 * lam * lam
        if lam == LAMBDA_CRITICAL:
            xi += 1e-9
        slope = measured_regime4_exponent(xi, [100, 200, 400, 800], lam=lam)
        assert slope == pytest.approx(regime4_exponent(xi), abs=0.15)

    def test_regime4_band_error_slope(self):
        """Raw log-log slope of the regime IV node error at x = 0 is close to 1/lambda^2"""
        lam = 1.0
        levels = []
        for N in [100, 200, 400, 800]:
            h = 1.0 / (N * lam)
            levels.append((h, abs(regime_band_errors(0.0, N, h, lam)["IV"])))
        slope = fit_order(levels, points=4)
        assert slope == pytest.approx(1.0 / lam**2, abs=0.15)

    def test_rannacher_ratio(self):
        assert error_ratio_rannacher_tc(LAMBDA_CRITICAL) == pytest.approx(1.5, abs=1e-12)
        assert error_ratio_rannacher_tc(0.01) == pytest.approx(1.0, abs=1e-3)

    def test_cost_optimum(self):
        best = cost_constrained_errors(LAMBDA_CRITICAL)
        assert best.lambda_star_r == pytest.approx(0.7559, abs=5e-4)
        assert best.e_tc < cost_constrained_errors(best.lambda_star_r).e_r

    def test_measured_rannacher_ratio(self, config):
        result = run("rannacher_compare", {"lambdas": [0.3, 0.5], "level": 2}, config)
        for lam, analytic, measured in result.rows:
            assert math.isfinite(measured), f"lambda={lam}"
            assert analytic >= 1.0


class TestBlackScholes:
    def test_gamma_second_order(self, config):
        result = run("bs_gamma", {"lambda": 0.0125, "levels": 5}, config)
        assert 1.7 <= result.metric <= 2.3

    def test_gamma_first_order_above_critical(self, config):
        result = run("bs_gamma", {"lambda": 0.05, "levels": 5}, config)
        assert 0.7 <= result.metric <= 1.4

    def test_gamma_order_against_lambda(self, config):
        """Second order up to lambda = 1/(sigma K sqrt 2), then 1/(sigma K lambda)^2"""
        result = run("bs_order_vs_lambda", {"levels": 5}, config)
        assert [row[0] for row in result.rows] == [0.0125, 0.025, 0.035, 0.05]
        assert [row[2] for row in result.rows] == pytest.approx([2.0, 2.0, 2.0, 1.0])
        for lam, fitted, expected in result.rows:
            assert abs(fitted - expected) <= 0.4, f"lambda={lam}"
        assert result.passed is True


class TestAmericanTable:
    def test_value_ratios_below_critical(self, config):
        result = run("american_table", {"lambda": 0.0125, "levels": 4, "base_m": 1600}, config)
        assert [row[:2] for row in result.rows] == [(3200, 640), (6400, 1280)]
        for row in result.rows:
            assert 3.8 <= row[2] <= 4.1

    def test_gamma_ratios_above_critical(self, config):
        result = run("american_table", {"lambda": 0.05, "levels": 4, "base_m": 1600}, config)
        for row in result.rows:
            assert 1.9 <= row[4] <= 2.2
