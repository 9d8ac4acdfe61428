import math

import numpy as np
import pytest

import epigame as eg
from epigame.errors import (
    DissipationViolation,
    NonPositiveInfectious,
    PreconditionViolated,
    TargetBelowFloor,
)

ALPHA_806 = 0.5 * (0.806 * 0.02) ** 2


class TestEpidemicStorage:
    def test_zero_at_design_point(self, example1):
        d, params = example1["design"], example1["params"]
        s = eg.epidemic_storage(params, d, 0.806, d.beta_star * d.I_star,
                                d.beta_star * d.R_star, d.beta_star)
        assert s == pytest.approx(0.0, abs=1e-18)

    def test_endemic_start_level_is_rate_gap_term(self, example1):
        params = example1["params"]
        I0, R0 = eg.reference_epidemics(params, 0.15)
        s = eg.epidemic_storage(params, example1["design"], 0.806,
                                0.15 * I0, 0.15 * R0, 0.15)
        assert s == pytest.approx(ALPHA_806, rel=1e-9)

    def test_nonnegative_everywhere(self, example1):
        rng = np.random.default_rng(17)
        params, d = example1["params"], example1["design"]
        for _ in range(1000):
            B = rng.uniform(0.15, 0.19)
            cI = rng.uniform(1e-6, B)
            cR = rng.uniform(0.0, B - cI)
            assert eg.epidemic_storage(params, d, 0.806, cI, cR, B) >= 0.0

    def test_rejects_nonpositive_scaled_infectious(self, example1):
        with pytest.raises(NonPositiveInfectious):
            eg.epidemic_storage(example1["params"], example1["design"],
                                0.806, 0.0, 0.01, 0.17)


class TestLyapunovLevel:
    def test_zero_at_equilibrium(self, example1):
        d = example1["design"]
        state = eg.SystemState(I=d.I_star, R=d.R_star, x=d.x_star, q=0.0)
        level = eg.lyapunov_level(example1["protocol"], example1["profile"],
                                  example1["params"], d, 0.806, state)
        assert level.total == pytest.approx(0.0, abs=1e-15)

    def test_endemic_start_storage_free(self, example1):
        level = eg.lyapunov_level(example1["protocol"], example1["profile"],
                                  example1["params"], example1["design"],
                                  0.806, example1["initial"])
        assert level.flow_storage == 0.0
        assert level.total == pytest.approx(ALPHA_806, rel=1e-9)

    def test_off_support_start_adds_flow_storage(self, case2_setting):
        proto = eg.SmithProtocol(lam=0.1, t_bar=0.1)
        params, d = case2_setting["params"], case2_setting["design"]
        I0, R0 = eg.reference_epidemics(params, 0.12)
        state = eg.SystemState(I=I0, R=R0, x=[1.0, 0.0, 0.0], q=0.0)
        level = eg.lyapunov_level(proto, case2_setting["profile"], params,
                                  d, 0.5, state)
        assert level.flow_storage > 0.0
        assert level.total == pytest.approx(
            level.flow_storage + level.epidemic_storage)


class TestPiStar:
    def test_exact_at_zero_level(self, example1):
        assert eg.pi_star(example1["profile"], example1["params"],
                          example1["design"], 0.806, 0.0) == 1.0

    def test_reference_value(self, example1):
        pi = eg.pi_star(example1["profile"], example1["params"],
                        example1["design"], 0.806, ALPHA_806)
        assert pi == pytest.approx(1.3436, abs=1e-3)

    def test_monotone_in_level(self, example1):
        alphas = np.geomspace(1e-7, 3e-3, 12)
        pis = [eg.pi_star(example1["profile"], example1["params"],
                          example1["design"], 0.806, a) for a in alphas]
        assert all(b >= a - 1e-6 for a, b in zip(pis, pis[1:]))

    def test_monotone_in_weight(self, example1):
        """Certified overshoot never improves by weighting the rate gap
        more heavily."""
        vals = []
        for u in (0.1, 0.316, 0.5, 0.806, 1.0, 2.0):
            vals.append(eg.pi_star(example1["profile"], example1["params"],
                                   example1["design"], u,
                                   0.5 * (u * 0.02) ** 2))
        assert all(b >= a - 1e-6 for a, b in zip(vals, vals[1:]))

    def test_floor_respected(self, example1):
        floor = eg.overshoot_floor(example1["profile"], example1["params"],
                                   example1["design"], 0.15)
        for u in (0.1, 0.316, 0.5, 0.806, 1.0, 2.0):
            pi = eg.pi_star(example1["profile"], example1["params"],
                            example1["design"], u, 0.5 * (u * 0.02) ** 2)
            assert pi >= floor - 1e-6


class TestPiStarOracle:
    def test_exact_at_zero_level(self, example1):
        res = eg.pi_star_oracle(example1["profile"], example1["params"],
                                example1["design"], 0.806, 0.0)
        assert res.value == pytest.approx(1.0, abs=1e-12)

    def test_reference_value(self, example1):
        res = eg.pi_star_oracle(example1["profile"], example1["params"],
                                example1["design"], 0.806, ALPHA_806)
        assert res.value == pytest.approx(1.3436, abs=5e-3)

    def test_lower_bounds_solver(self, example1):
        for a in (1e-6, 1e-5, 1e-4, ALPHA_806, 1e-3):
            pi = eg.pi_star(example1["profile"], example1["params"],
                            example1["design"], 0.806, a)
            res = eg.pi_star_oracle(example1["profile"], example1["params"],
                                    example1["design"], 0.806, a)
            assert res.value <= pi + 1e-3
            assert pi <= res.value + 3.0 * (res.resolution + 1e-4)

    def test_rejects_coarse_grid(self, example1):
        with pytest.raises(ValueError):
            eg.pi_star_oracle(example1["profile"], example1["params"],
                              example1["design"], 0.806, 1e-4, grid=100)


class TestOvershootFloor:
    def test_reference_value(self, example1):
        floor = eg.overshoot_floor(example1["profile"], example1["params"],
                                   example1["design"], 0.15)
        assert floor == pytest.approx(1.1504, abs=1e-4)

    def test_band_capped_by_riskiest_strategy(self, example1):
        # gap 0.02 puts beta_bar exactly at the top rung either way
        f_above = eg.overshoot_floor(example1["profile"],
                                     example1["params"],
                                     example1["design"], 0.19)
        assert f_above == pytest.approx(1.1504, abs=1e-4)


class TestAnytimeBound:
    def test_reference_bound(self, example1):
        bound = eg.anytime_bound(example1["profile"], example1["params"],
                                 example1["design"], 0.806,
                                 example1["initial"],
                                 protocol=example1["protocol"])
        assert bound.pi_ratio == pytest.approx(1.3436, abs=1e-3)
        assert bound.alpha == pytest.approx(ALPHA_806, rel=1e-9)
        assert bound.rate_band == pytest.approx(0.02, abs=1e-12)
        assert bound.rate_ceiling is None  # relaxing toward a riskier mix

    def test_vanishing_weight_vanishing_bound(self, example1):
        bound = eg.anytime_bound(example1["profile"], example1["params"],
                                 example1["design"], 1e-6,
                                 example1["initial"])
        assert bound.pi_ratio <= 1.0 + 1e-3

    def test_no_gap_no_overshoot(self, example1):
        d = example1["design"]
        init = eg.SystemState(I=d.I_star, R=d.R_star, x=d.x_star, q=0.0)
        bound = eg.anytime_bound(example1["profile"], example1["params"],
                                 d, 0.806, init)
        assert bound.pi_ratio == 1.0

    def test_ceiling_when_tightening(self, example1):
        # start risky, design cautious: the rate may never exceed the start
        params, profile = example1["params"], example1["profile"]
        I0, R0 = eg.reference_epidemics(params, 0.19)
        init = eg.SystemState(I=I0, R=R0, x=[0.0, 1.0], q=0.0)
        bound = eg.anytime_bound(profile, params, example1["design"],
                                 0.806, init, protocol=example1["protocol"])
        assert bound.rate_ceiling == pytest.approx(0.19)

    def test_rejects_non_endemic_start(self, example1):
        bad = eg.SystemState(I=0.05, R=0.1, x=[1.0, 0.0], q=0.0)
        with pytest.raises(PreconditionViolated):
            eg.anytime_bound(example1["profile"], example1["params"],
                             example1["design"], 0.806, bad)

    def test_rejects_nonzero_payoff_state(self, example1):
        params = example1["params"]
        I0, R0 = eg.reference_epidemics(params, 0.15)
        bad = eg.SystemState(I=I0, R=R0, x=[1.0, 0.0], q=0.5)
        with pytest.raises(PreconditionViolated):
            eg.anytime_bound(example1["profile"], params,
                             example1["design"], 0.806, bad)

    def test_rejects_initial_flow_storage(self, case2_setting):
        # off-support start carries storage; the plain bound must refuse
        proto = eg.SmithProtocol(lam=0.1, t_bar=0.1)
        params, d = case2_setting["params"], case2_setting["design"]
        I0, R0 = eg.reference_epidemics(params, 0.12)
        init = eg.SystemState(I=I0, R=R0, x=[1.0, 0.0, 0.0], q=0.0)
        with pytest.raises(PreconditionViolated):
            eg.anytime_bound(case2_setting["profile"], params, d, 0.5,
                             init, protocol=proto)


class TestInitialLevel:
    def test_on_support_reduces_to_rate_gap_term(self, example1):
        lvl = eg.initial_level(example1["protocol"], example1["profile"],
                               example1["design"], 0.806, [1.0, 0.0])
        assert lvl.flow_storage == 0.0
        assert lvl.alpha == pytest.approx(ALPHA_806, rel=1e-9)

    def test_off_support_adds_exact_storage(self, case2_setting):
        # one pairwise advantage of 0.07, below the kink: 0.5*lam*a^2
        proto = eg.SmithProtocol(lam=0.1, t_bar=0.1)
        lvl = eg.initial_level(proto, case2_setting["profile"],
                               case2_setting["design"], 0.5, [1.0, 0.0, 0.0])
        assert lvl.flow_storage == pytest.approx(0.5 * 0.1 * 0.07 ** 2)
        assert lvl.alpha == pytest.approx(
            0.5 * (0.5 * 0.03) ** 2 + 2.45e-4, rel=1e-9)
        # the simplified variant drops the sensitivity: 10x larger here
        assert lvl.flow_storage_simplified == pytest.approx(0.5 * 0.07 ** 2)

    def test_at_target_with_flat_payoff_zero(self, example1):
        d = example1["design"]
        lvl = eg.initial_level(example1["protocol"], example1["profile"],
                               d, 0.806, d.x_star)
        assert lvl.alpha == pytest.approx(0.0, abs=1e-18)


class TestSelectUpsilon:
    def test_reference_selection(self, example1):
        ups = eg.select_upsilon(example1["profile"], example1["params"],
                                0.1, 1.0, 0.15, 1.344)
        assert ups == pytest.approx(0.806, abs=1e-3)

    def test_target_below_floor(self, example1):
        with pytest.raises(TargetBelowFloor) as exc:
            eg.select_upsilon(example1["profile"], example1["params"],
                              0.1, 1.0, 0.15, 1.1503)
        assert exc.value.floor == pytest.approx(1.1504, abs=1e-4)

    def test_generous_target_capped(self, example1):
        ups = eg.select_upsilon(example1["profile"], example1["params"],
                                0.1, 1.0, 0.15, 10.0, upsilon_max=4.0)
        assert ups == 4.0
        pi = eg.pi_star(example1["profile"], example1["params"],
                        example1["design"], 4.0, 0.5 * (4.0 * 0.02) ** 2)
        assert pi <= 10.0


class TestCheckDissipation:
    def test_clean_run_passes(self, example1):
        cfg = eg.MechanismConfig(design=example1["design"], upsilon=0.806)
        traj = eg.integrate(example1["protocol"], example1["profile"],
                            example1["params"], cfg, example1["initial"],
                            400.0)
        report = eg.check_dissipation(traj, example1["params"])
        assert report.worst_margin <= 1e-6

    def test_equilibrium_run_degenerate(self, example1):
        d = example1["design"]
        init = eg.SystemState(I=d.I_star, R=d.R_star, x=d.x_star, q=0.0)
        cfg = eg.MechanismConfig(design=d, upsilon=0.806)
        traj = eg.integrate(example1["protocol"], example1["profile"],
                            example1["params"], cfg, init, 50.0)
        report = eg.check_dissipation(traj, example1["params"])
        assert report.worst_margin == pytest.approx(0.0, abs=1e-12)

    def test_violation_raised_on_corrupted_level(self, example1):
        cfg = eg.MechanismConfig(design=example1["design"], upsilon=0.806)
        traj = eg.integrate(example1["protocol"], example1["profile"],
                            example1["params"], cfg, example1["initial"],
                            100.0)
        traj.L = traj.L + np.linspace(0.0, 1.0, traj.L.size) ** 2
        with pytest.raises(DissipationViolation):
            eg.check_dissipation(traj, example1["params"])
