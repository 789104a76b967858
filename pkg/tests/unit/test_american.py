"""
Unit tests for the penalised American put solver
"""

import numpy as np
import pytest

from timechange_cn.exceptions import PenaltyConvergenceError
from timechange_cn.mesh import bs_refinement_ladder, build_time_grid
from timechange_cn.models import PenaltyConfig
from timechange_cn.solvers.american import (
    PenaltySolveStats,
    american_boundary,
    atm_quantities,
    payoff_put,
    penalty_step,
    solve_american_put,
    successive_ratio,
    table_row_ratios,
)
from timechange_cn.solvers.blackscholes import (
    greeks_from_field,
    initial_payoff,
    solve_european,
    step_bs_timechanged,
)
from timechange_cn.solvers.tridiag import Boundary


@pytest.fixture
def american_solution(put_params, s_grid, penalty):
    """lambda = 0.0125 at h = 0.5: N = 80"""
    return solve_american_put(put_params, s_grid, build_time_grid(0.25, 80), penalty)


class TestPayoff:
    """Test the put payoff and boundary data"""

    def test_payoff_values(self):
        np.testing.assert_array_equal(payoff_put([90.0, 100.0, 110.0], 100.0), [10.0, 0.0, 0.0])

    def test_scalar_payoff(self):
        assert payoff_put(40.0, 100.0) == 60.0

    def test_boundary(self, put_params):
        b = american_boundary(put_params)
        assert (b.left, b.right) == (100.0, 0.0)


class TestPenaltyStep:
    """Test single penalised steps"""

    def test_zero_penalty_is_the_european_step(self, put_params, s_grid):
        k = 0.00625
        V0 = initial_payoff(put_params, s_grid)
        penalised = penalty_step(V0, 0.0, k, put_params, PenaltyConfig(rho=0.0))
        plain = step_bs_timechanged(V0, 0.0, k, put_params, boundary=Boundary.dirichlet(100.0, 0.0))
        np.testing.assert_array_equal(penalised.values, plain.values)

    def test_step_respects_payoff(self, put_params, s_grid, penalty):
        V0 = initial_payoff(put_params, s_grid)
        V1 = penalty_step(V0, 0.0, 0.00625, put_params, penalty)
        g = payoff_put(s_grid.nodes(), 100.0)
        assert np.all(V1.values >= g - 10.0 * 100.0 / penalty.rho)
        assert V1.level == 1

    def test_non_convergence_raises(self, put_params, s_grid):
        """The first solve from the payoff always moves the active set"""
        V0 = initial_payoff(put_params, s_grid)
        cfg = PenaltyConfig(rho=1.0e6, tol=1.0e-12, max_iter=1)
        with pytest.raises(PenaltyConvergenceError):
            penalty_step(V0, 0.0, 0.00625, put_params, cfg)


class TestSolveAmericanPut:
    """Test full American put solves"""

    def test_deep_in_the_money_equals_payoff(self, american_solution, s_grid, penalty):
        V, _ = american_solution
        S = s_grid.nodes()
        deep = S <= 70.0
        g = payoff_put(S[deep], 100.0)
        assert np.all(np.abs(V.values[deep] - g) <= 100.0 / penalty.rho)

    def test_penalty_floor(self, american_solution, s_grid, penalty):
        V, _ = american_solution
        g = payoff_put(s_grid.nodes(), 100.0)
        assert np.all(V.values >= g - 10.0 * 100.0 / penalty.rho)

    def test_dominates_european(self, american_solution, put_params, s_grid):
        V, _ = american_solution
        european = solve_european(put_params, s_grid, build_time_grid(0.25, 80))
        assert np.all(V.values >= european.values - 1e-8)

    def test_active_set_iterations(self, american_solution):
        _, stats = american_solution
        assert len(stats.iterations) == 80
        assert stats.max_iterations <= 5

    def test_atm_delta_bounds(self, american_solution, put_params):
        V, _ = american_solution
        value, delta, gamma = atm_quantities(V, put_params)
        assert value > 0.0
        assert -1.0 <= delta <= 0.0
        assert gamma > 0.0

    @pytest.mark.parametrize("M", [400, 800, 1600])
    def test_monotone_with_bounded_delta_on_every_level(self, put_params, penalty, M):
        """lambda = 0.0125 ladder: V decreasing in S, delta in [-1, 0] at every node"""
        grid, tg = bs_refinement_ladder(0.0125, 1, M, 200.0, 0.25, 100.0)[0]
        V, _ = solve_american_put(put_params, grid, tg, penalty)
        assert np.all(np.diff(V.values) <= 1e-8)
        delta, _ = greeks_from_field(V)
        assert np.all(delta >= -1.01)
        assert np.all(delta <= 0.01)

    def test_call_parameters_are_treated_as_put(self, call_params, put_params, s_grid, penalty):
        tg = build_time_grid(0.25, 10)
        a, _ = solve_american_put(call_params, s_grid, tg, penalty)
        b, _ = solve_american_put(put_params, s_grid, tg, penalty)
        np.testing.assert_array_equal(a.values, b.values)


class TestRatios:
    """Test successive-difference ratios"""

    def test_second_order(self):
        assert successive_ratio(1.0 + 16e-4, 1.0 + 4e-4, 1.0 + 1e-4) == pytest.approx(4.0)

    def test_first_order(self):
        assert successive_ratio(1.4, 1.2, 1.1) == pytest.approx(2.0)

    def test_equal_mid_and_fine(self):
        with pytest.raises(ZeroDivisionError):
            successive_ratio(1.0, 2.0, 2.0)

    def test_table_row(self):
        levels = [(5.0 + 16e-4, 0.5 + 8e-3, 0.04 + 4e-2), (5.0 + 4e-4, 0.5 + 4e-3, 0.04 + 2e-2),
                  (5.0 + 1e-4, 0.5 + 2e-3, 0.04 + 1e-2)]
        ratios = table_row_ratios(levels)
        assert ratios == pytest.approx((4.0, 2.0, 2.0))

    def test_table_row_needs_three_levels(self):
        with pytest.raises(ValueError):
            table_row_ratios([(1.0, 1.0, 1.0), (2.0, 2.0, 2.0)])


class TestStats:
    """Test iteration bookkeeping"""

    def test_empty(self):
        stats = PenaltySolveStats()
        assert stats.max_iterations == 0
        assert stats.to_dict() == {"steps": 0, "max_iterations": 0, "total_iterations": 0}

    def test_counts(self):
        stats = PenaltySolveStats(iterations=[2, 3, 1])
        assert stats.to_dict() == {"steps": 3, "max_iterations": 3, "total_iterations": 6}
