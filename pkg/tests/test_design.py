import numpy as np
import pytest

import epigame as eg
from epigame.design import Case
from epigame.errors import Assumption1Violated, BudgetOutOfRange, InvalidRho

PARAMS = eg.EpidemicParams(g=0.0, sigma_bar=0.1, omega_bar=0.005, gamma=0.1)


def profile(beta, cost):
    return eg.validate_profile(beta, cost, PARAMS)


class TestAssumption1:
    def test_two_strategies_vacuous(self):
        assert eg.check_assumption1(profile([0.15, 0.19], [0.2, 0.0]))

    def test_decreasing_slopes_hold(self):
        # slopes 6.67 and 2.5
        assert eg.check_assumption1(profile([0.12, 0.15, 0.19],
                                            [0.3, 0.1, 0.0]))

    def test_increasing_slopes_fail(self):
        # slopes 0.333 and 7.25
        assert not eg.check_assumption1(profile([0.12, 0.15, 0.19],
                                                [0.3, 0.29, 0.0]))


class TestClassification:
    def test_example1_interior(self):
        cls = eg.classify_case(profile([0.15, 0.19], [0.2, 0.0]), 0.1)
        assert cls.kind is Case.I and cls.pivot == 0

    def test_boundary_budget(self):
        cls = eg.classify_case(profile([0.12, 0.15, 0.19], [0.3, 0.1, 0.0]),
                               0.1)
        assert cls.kind is Case.II and cls.pivot == 1

    def test_interior_three_strategies(self):
        cls = eg.classify_case(profile([0.12, 0.15, 0.19], [0.3, 0.1, 0.0]),
                               0.2)
        assert cls.kind is Case.I and cls.pivot == 0

    def test_budget_out_of_range(self):
        prof = profile([0.15, 0.19], [0.2, 0.0])
        for c_star in (0.0, 0.2, 0.3, -0.1):
            with pytest.raises(BudgetOutOfRange):
                eg.classify_case(prof, c_star)

    def test_near_top_level_stays_interior(self):
        # within classification tolerance of ctilde_1 the vertex target
        # would sit at the lowest rate; keep the interior branch
        prof = profile([0.12, 0.15, 0.19], [0.3, 0.1, 0.0])
        cls = eg.classify_case(prof, 0.3 - 1e-12)
        assert cls.kind is Case.I and cls.pivot == 0


class TestOptimalTarget:
    def test_example1_values(self):
        d = eg.optimal_target(profile([0.15, 0.19], [0.2, 0.0]), PARAMS,
                              0.1, 1.0)
        assert d.beta_star == pytest.approx(0.17, abs=1e-12)
        np.testing.assert_allclose(d.x_star, [0.5, 0.5], atol=0)
        assert d.I_star == pytest.approx(0.019608, abs=1e-6)
        assert d.R_star == pytest.approx(0.392157, abs=1e-6)
        np.testing.assert_allclose(d.r_star, [0.2, 0.0])
        assert d.q_interval == (0.0, 0.0)

    def test_boundary_target_values(self, case2_setting):
        d = case2_setting["design"]
        np.testing.assert_allclose(d.x_star, [0.0, 1.0, 0.0])
        assert d.beta_star == pytest.approx(0.15, abs=1e-15)
        np.testing.assert_allclose(d.r_star, [0.23, 0.1, -0.07], atol=1e-15)
        assert d.zeta1 == pytest.approx(1.75, abs=1e-12)
        assert d.zeta2 == pytest.approx(0.07 / 0.03, abs=1e-12)
        assert d.q_interval == (pytest.approx(-0.07 / 0.03), pytest.approx(1.75))

    def test_degenerate_rate_gives_empty_epidemic(self):
        I, R = eg.endemic_point(PARAMS, PARAMS.sigma)
        assert I == 0.0 and R == 0.0

    def test_assumption1_enforced(self):
        with pytest.raises(Assumption1Violated):
            eg.optimal_target(profile([0.12, 0.15, 0.19], [0.3, 0.29, 0.0]),
                              PARAMS, 0.1, 1.0)

    def test_rho_enforced_on_boundary_target(self):
        with pytest.raises(InvalidRho):
            eg.optimal_target(profile([0.12, 0.15, 0.19], [0.3, 0.1, 0.0]),
                              PARAMS, 0.1, 0.03)

    def test_budget_feasibility_of_target(self):
        rng = np.random.default_rng(3)
        prof = profile([0.12, 0.15, 0.19], [0.3, 0.1, 0.0])
        for c_star in rng.uniform(0.01, 0.29, 50):
            d = eg.optimal_target(prof, PARAMS, float(c_star), 0.08)
            assert float(prof.ctilde @ d.x_star) <= c_star + 1e-12

    def test_endemic_ratio_identity(self):
        d = eg.optimal_target(profile([0.15, 0.19], [0.2, 0.0]), PARAMS,
                              0.1, 1.0)
        assert d.I_star / d.R_star == pytest.approx(
            PARAMS.eta / (1.0 - PARAMS.eta), rel=1e-14)

    def test_endemic_level_increasing_in_rate(self):
        rates = np.linspace(PARAMS.sigma + 1e-4, 0.19, 200)
        levels = [eg.endemic_point(PARAMS, b)[0] for b in rates]
        assert np.all(np.diff(levels) > 0)


class TestRhoValidation:
    def test_two_strategies_any_rho(self):
        prof = profile([0.15, 0.19], [0.2, 0.0])
        cls = eg.classify_case(prof, 0.1)
        for rho in (1e-9, 0.5, 100.0):
            assert eg.validate_rho(prof, cls, 0.17, rho)

    def test_boundary_threshold(self, case2_setting):
        prof = case2_setting["profile"]
        cls = case2_setting["design"].classification
        assert eg.validate_rho(prof, cls, 0.15, 0.04)
        assert not eg.validate_rho(prof, cls, 0.15, 0.03)


class TestLatticeOracle:
    def test_example1(self):
        prof = profile([0.15, 0.19], [0.2, 0.0])
        grid = eg.lp_oracle_beta_star(prof, 0.1, 2000)
        assert grid == pytest.approx(0.17, abs=(0.19 - 0.15) / 2000 + 1e-12)

    def test_budget_above_top_level_unconstrained(self):
        prof = profile([0.15, 0.19], [0.2, 0.0])
        assert eg.lp_oracle_beta_star(prof, 0.25, 1000) == pytest.approx(0.15)

    def test_vanishing_budget_pins_riskiest(self):
        prof = profile([0.12, 0.15, 0.19], [0.3, 0.1, 0.0])
        assert eg.lp_oracle_beta_star(prof, 1e-12, 1000) == pytest.approx(0.19)

    def test_rejects_large_n(self):
        p5 = eg.StrategyProfile([0.12, 0.14, 0.16, 0.18, 0.2],
                                [0.5, 0.4, 0.3, 0.2, 0.0])
        with pytest.raises(ValueError):
            eg.lp_oracle_beta_star(p5, 0.1, 1000)


class TestTargetIsUniqueBestResponse:
    """The stationary payoff must make the target the only best response
    on the designed-rate slice of the simplex."""

    def test_boundary_target_slice(self, case2_setting):
        prof, d = case2_setting["profile"], case2_setting["design"]
        # lattice points on beta'x = beta*: x = (a, 1-1.75a, 0.75a)
        N = 400
        best = float(d.x_star @ d.r_o)
        for k in range(4, N + 1, 4):
            a = k / N
            x = np.array([a, 1.0 - 1.75 * a, 0.75 * a])
            if x.min() < 0:
                break
            assert abs(prof.beta @ x - d.beta_star) < 1e-12
            assert float(x @ d.r_o) < best - 1e-9 * a

    def test_interior_target_slice(self):
        prof = profile([0.12, 0.15, 0.19], [0.3, 0.1, 0.0])
        d = eg.optimal_target(prof, PARAMS, 0.2, 0.08)
        # tangent direction with beta'dir = 0 that enters the simplex
        direction = np.array([4.0, -7.0, 3.0])
        best = float(d.x_star @ d.r_o)
        for t in np.linspace(1e-3, 0.07, 30):
            x = d.x_star + t * direction
            assert x.min() >= 0 and abs(prof.beta @ x - d.beta_star) < 1e-12
            assert float(x @ d.r_o) < best - 1e-9 * t
