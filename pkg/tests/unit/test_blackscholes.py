"""
Unit tests for the Black-Scholes closed forms and the time-changed solver
"""

import math

import numpy as np
import pytest

from timechange_cn.exceptions import GridError
from timechange_cn.mesh import bs_refinement_ladder, build_space_grid, build_time_grid
from timechange_cn.models import BSParams, SolutionField
from timechange_cn.solvers.blackscholes import (
    atm_greeks,
    bs_analytic,
    bs_gamma_error,
    bs_operator,
    european_boundary,
    greeks_from_field,
    initial_payoff,
    payoff,
    predicted_bs_order,
    solve_bs_nonuniform,
    solve_european,
    step_bs_timechanged,
    transformed_theta,
)


# lambda = 0.0125: M = 400, 800, 1600 with N = 80, 160, 320
LADDER = bs_refinement_ladder(0.0125, 3, 400, 200.0, 0.25, 100.0)


def analytic_field(grid, p):
    """Closed-form values at tau = T sampled on the grid (0 at S = 0 for a call)"""
    S = grid.nodes()
    values = np.array([bs_analytic(s, p.T, p).value if s > 0 else 0.0 for s in S])
    return SolutionField(grid=grid, values=values)


class TestAnalytic:
    """Test closed-form prices and greeks"""

    def test_atm_call(self, call_params):
        g = bs_analytic(100.0, 0.25, call_params)
        assert g.value == pytest.approx(4.6150, abs=1e-3)
        assert g.gamma == pytest.approx(0.039287, abs=1e-5)
        assert 0.5 < g.delta < 0.6

    def test_put_call_parity(self, call_params, put_params):
        for S in (80.0, 100.0, 125.0):
            c = bs_analytic(S, 0.25, call_params).value
            p = bs_analytic(S, 0.25, put_params).value
            assert c - p == pytest.approx(S - 100.0 * math.exp(-0.05 * 0.25), abs=1e-10)

    def test_call_arbitrage_bounds(self, call_params):
        for S in (50.0, 90.0, 100.0, 110.0, 190.0):
            value = bs_analytic(S, 0.25, call_params).value
            assert max(S - 100.0 * math.exp(-0.05 * 0.25), 0.0) - 1e-12 <= value <= S

    def test_gamma_is_shared_by_put_and_call(self, call_params, put_params):
        assert bs_analytic(95.0, 0.25, call_params).gamma == pytest.approx(
            bs_analytic(95.0, 0.25, put_params).gamma, rel=1e-14
        )

    def test_invalid_inputs(self, call_params):
        with pytest.raises(ValueError):
            bs_analytic(100.0, 0.0, call_params)
        with pytest.raises(ValueError):
            bs_analytic(0.0, 0.25, call_params)


class TestTransformedTheta:
    """Test dV/dt~ including its finite limit at t~ = 0"""

    def test_limit_at_strike(self, call_params):
        assert transformed_theta(100.0, 0.0, call_params) == pytest.approx(-7.97885, abs=1e-5)

    def test_limit_away_from_strike(self, call_params):
        assert transformed_theta(90.0, 0.0, call_params) == 0.0

    def test_matches_chain_rule(self, call_params):
        """dC/dt~ = -2 t~ Theta_C(tau = t~^2)"""
        for S, tt in ((100.0, 0.5), (85.0, 0.3), (120.0, 0.1)):
            theta = bs_analytic(S, tt * tt, call_params).theta
            assert transformed_theta(S, tt, call_params) == pytest.approx(-2.0 * tt * theta, rel=1e-12)

    def test_approaches_limit(self, call_params):
        assert transformed_theta(100.0, 1e-6, call_params) == pytest.approx(
            transformed_theta(100.0, 0.0, call_params), abs=1e-4
        )


class TestOperator:
    """Test the discrete Black-Scholes operator"""

    def test_linear_functions_are_annihilated(self, s_grid, call_params):
        op = bs_operator(s_grid, call_params)
        S = s_grid.nodes()
        np.testing.assert_allclose(op.apply(S)[1:-1], 0.0, atol=1e-8)

    def test_constant_maps_to_rate(self, s_grid, call_params):
        op = bs_operator(s_grid, call_params)
        np.testing.assert_allclose(op.apply(np.ones(s_grid.M + 1))[1:-1], 0.05, rtol=0, atol=1e-10)

    def test_off_diagonals_non_positive(self, s_grid, call_params):
        """Node S = 0.5 is upwinded; everywhere else the central form keeps the signs"""
        op = bs_operator(s_grid, call_params)
        assert np.all(op.lower[1:-1] <= 0.0)
        assert np.all(op.upper[1:-1] <= 0.0)
        assert op.lower[1] == pytest.approx(-0.02)

    def test_no_upwinding_without_rate(self, s_grid):
        p = BSParams(sigma=0.2, r=0.0, K=100.0, T=0.25)
        op = bs_operator(s_grid, p)
        np.testing.assert_allclose(op.lower, op.upper, rtol=1e-15)


class TestBoundaries:
    """Test Dirichlet data at S = 0 and S_max"""

    def test_call(self, call_params):
        b = european_boundary(call_params, 0.5, 200.0)
        assert b.left == 0.0
        assert b.right == pytest.approx(200.0 - 100.0 * math.exp(-0.05 * 0.25))

    def test_put(self, put_params):
        b = european_boundary(put_params, 0.5, 200.0)
        assert b.left == pytest.approx(100.0 * math.exp(-0.05 * 0.25))
        assert b.right == 0.0

    def test_payoff(self, call_params, put_params):
        S = np.array([90.0, 100.0, 110.0])
        np.testing.assert_array_equal(payoff(S, call_params), [0.0, 0.0, 10.0])
        np.testing.assert_array_equal(payoff(S, put_params), [10.0, 0.0, 0.0])


class TestTimeChangedStep:
    """Test single steps and full European solves"""

    def test_first_step_residual(self, s_grid, call_params):
        """At t~_0 = 0 the explicit side is the identity"""
        k = 0.00625
        V0 = initial_payoff(call_params, s_grid)
        V1 = step_bs_timechanged(V0, 0.0, k, call_params)
        op = bs_operator(s_grid, call_params)
        lhs = V1.values + k * k * op.apply(V1.values)
        np.testing.assert_allclose(lhs[1:-1], V0.values[1:-1], atol=1e-9)
        assert V1.level == 1

    def test_strike_must_be_a_node(self, call_params):
        grid = build_space_grid(0.0, 200.0, 301)
        with pytest.raises(GridError):
            initial_payoff(call_params, grid)

    def test_matches_analytic_value(self, s_grid, call_params):
        """lambda = 0.0125 at h = 0.5 gives N = 80"""
        V = solve_european(call_params, s_grid, build_time_grid(0.25, 80))
        S = s_grid.nodes()
        for target in (80.0, 100.0, 120.0):
            j = s_grid.index_of(target)
            assert V.values[j] == pytest.approx(bs_analytic(S[j], 0.25, call_params).value, abs=1e-2)

    @pytest.mark.parametrize("level", range(len(LADDER)))
    def test_solution_shape_on_every_level(self, call_params, level):
        grid, tg = LADDER[level]
        V = solve_european(call_params, grid, tg)
        assert np.all(np.diff(V.values) >= -1e-8)
        delta, _ = greeks_from_field(V)
        assert np.all(delta >= -0.01)
        assert np.all(delta <= 1.01)

    def test_deep_in_the_money_call(self, call_params):
        """S = 2K on [0, 400] with M = 3200: C close to S - K exp(-rT)"""
        grid = build_space_grid(0.0, 400.0, 3200)
        tg = build_time_grid(0.25, 320)
        V = solve_european(call_params, grid, tg)
        j = grid.index_of(200.0)
        assert V.values[j] == pytest.approx(200.0 - 100.0 * math.exp(-0.05 * 0.25), rel=1e-3)

    def test_nonuniform_original_time_equivalence(self, s_grid, put_params):
        tg = build_time_grid(0.25, 40)
        a = solve_european(put_params, s_grid, tg).values
        b = solve_bs_nonuniform(put_params, s_grid, tg).values
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-13 * np.max(np.abs(a)))

    @pytest.mark.parametrize("method", ["thomas", "banded"])
    def test_back_ends_agree(self, s_grid, call_params, method):
        tg = build_time_grid(0.25, 20)
        reference = solve_european(call_params, s_grid, tg)
        np.testing.assert_allclose(
            solve_european(call_params, s_grid, tg, method=method).values,
            reference.values, rtol=1e-10, atol=1e-10,
        )


class TestGreeks:
    """Test finite-difference delta and gamma"""

    def test_linear_field(self, s_grid):
        field = SolutionField(grid=s_grid, values=3.0 * s_grid.nodes() - 7.0)
        delta, gamma = greeks_from_field(field)
        np.testing.assert_allclose(delta, 3.0, rtol=1e-12)
        np.testing.assert_allclose(gamma, 0.0, atol=1e-9)

    def test_quadratic_field(self, s_grid):
        S = s_grid.nodes()
        delta, gamma = greeks_from_field(SolutionField(grid=s_grid, values=S**2))
        np.testing.assert_allclose(delta, 2.0 * S, rtol=1e-10, atol=1e-9)
        np.testing.assert_allclose(gamma, 2.0, rtol=1e-8)

    def test_gamma_of_sampled_closed_form_is_second_order(self, call_params):
        exact = bs_analytic(100.0, 0.25, call_params).gamma
        errors = []
        for M in (200, 400, 800):
            field = analytic_field(build_space_grid(0.0, 200.0, M), call_params)
            errors.append(abs(atm_greeks(field, 100.0)[2] - exact))
        assert 3.8 < errors[0] / errors[1] < 4.2
        assert 3.8 < errors[1] / errors[2] < 4.2

    def test_gamma_error_of_closed_form_field(self, call_params):
        field = analytic_field(build_space_grid(0.0, 200.0, 800), call_params)
        assert bs_gamma_error(field, call_params) < 1e-5

    def test_atm_greeks_needs_strike_node(self, s_grid):
        field = SolutionField(grid=s_grid, values=np.zeros(s_grid.M + 1))
        with pytest.raises(GridError):
            atm_greeks(field, 100.25)


class TestPredictedOrder:
    """Test min(2, 1/(sigma^2 K^2 lambda^2))"""

    def test_critical_lambda(self, call_params):
        assert call_params.lambda_critical == pytest.approx(0.0353553, abs=1e-7)
        assert predicted_bs_order(call_params.lambda_critical, call_params) == pytest.approx(2.0)

    def test_below_and_above(self, call_params):
        lc = call_params.lambda_critical
        assert predicted_bs_order(lc / 2, call_params) == 2.0
        assert predicted_bs_order(2 * lc, call_params) == pytest.approx(0.5)
        assert predicted_bs_order(0.05, call_params) == pytest.approx(1.0)

    def test_non_positive_lambda(self, call_params):
        with pytest.raises(ValueError):
            predicted_bs_order(0.0, call_params)
