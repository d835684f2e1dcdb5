import math

import numpy as np
import pytest

from burgers_feedback import (InitialCondition, InsufficientDataError,
                              ModelParams, alpha_admissible, beta_star,
                              check_step, decay_exponent_bound,
                              feasible_decay_exponent, fit_decay, make_grid,
                              run, stability_bounds, timestep_limits)


def params(theta, nu=1.0, wd=5.0, c0=1.0, c1=1.0):
    return ModelParams(nu=nu, wd=wd, c0=c0, c1=c1, theta=theta)


class TestDecayExponentBound:
    def test_quadratic_preset(self):
        assert decay_exponent_bound(params(1.0)) == 0.5

    def test_cosine_preset(self):
        p = params(0.5, nu=0.1, wd=3.0)
        assert decay_exponent_bound(p) == pytest.approx(0.0125, rel=1e-14)

    def test_theta_scaling(self):
        # doubling theta quadruples the bound when the min is unchanged
        assert decay_exponent_bound(params(1.0)) \
            == pytest.approx(4 * decay_exponent_bound(params(0.5)), rel=1e-14)

    def test_conditional_regime_rejected(self):
        with pytest.raises(ValueError, match="theta"):
            decay_exponent_bound(params(0.25))

    def test_step_condition_strict_below_bound(self):
        # exp beats its tangent: the condition fails exactly at the bound
        # for every k, and holds at any strictly smaller rate once k is small
        p = params(1.0)
        alpha = decay_exponent_bound(p)
        assert not alpha_admissible(p, 1e-4, alpha)
        assert alpha_admissible(p, 1e-4, 0.9 * alpha)

    def test_feasible_rate_approaches_bound(self):
        p = params(1.0)
        alpha = decay_exponent_bound(p)
        feas = feasible_decay_exponent(p, 1e-6)
        assert 0.0 < feas < alpha
        assert feas == pytest.approx(alpha, rel=1e-5)
        assert alpha_admissible(p, 1e-6, feas * (1 - 1e-12))

    def test_beta_star_positive_for_small_k(self):
        p = params(1.0)
        alpha = feasible_decay_exponent(p, 1e-4)
        assert beta_star(p, 1e-4, alpha * 0.99) > 0.0


class TestTimestepLimits:
    def test_hand_values(self):
        p = params(0.0, nu=1.0, wd=0.0)
        grid = make_grid(10, 1000, 1.0)  # h = 0.1
        b = timestep_limits(p, grid, w_inf=1.0)
        assert b.k_limits[0] == pytest.approx(0.12 / 108.19, rel=1e-12)
        assert b.k_limits[1] == pytest.approx(0.1 / 24.0, rel=1e-12)
        assert b.regime == "conditional"

    def test_zero_state_limits(self):
        p = params(0.0, nu=1.0, wd=0.0)
        grid = make_grid(10, 1000, 1.0)
        b = timestep_limits(p, grid, w_inf=0.0)
        assert math.isfinite(b.k_limits[0])
        assert b.k_limits[2] == math.inf
        assert b.k_limits[4] == math.inf

    def test_limits_diverge_toward_half(self):
        grid = make_grid(10, 1000, 1.0)
        b1 = timestep_limits(params(0.0, wd=0.0), grid, 1.0)
        b2 = timestep_limits(params(0.49, wd=0.0), grid, 1.0)
        assert all(x2 > 10 * x1 for x1, x2 in zip(b1.k_limits, b2.k_limits))

    def test_unconditional_regime_rejected(self):
        with pytest.raises(ValueError, match="theta"):
            timestep_limits(params(0.5), make_grid(10, 10, 1.0), 1.0)

    def test_margins_positive_iff_k_below_limit(self):
        p = params(0.1, nu=0.4, wd=2.0, c0=0.7, c1=1.3)
        for M in (10, 100, 1000, 100000):
            grid = make_grid(10, M, 1.0)
            b = timestep_limits(p, grid, w_inf=3.0)
            for k_lim, beta in zip(b.k_limits, b.betas):
                assert (beta > 0.0) == (grid.k < k_lim)

    def test_limit_one_monotone_in_nu_where_h_terms_dominate(self):
        # k1 grows with nu exactly while 108 nu^2 stays below the h^2 terms
        grid = make_grid(4, 100, 1.0)  # h = 0.25 keeps the h^2 terms large
        wd, w_inf = 8.0, 10.0
        nu_star = math.sqrt(grid.h ** 2 * (18 * wd ** 2 + 19 * w_inf ** 2)
                            / 108.0)
        nus = np.linspace(0.05 * nu_star, 0.95 * nu_star, 8)
        k1s = [timestep_limits(params(0.0, nu=float(nu), wd=wd), grid,
                               w_inf).k_limits[0] for nu in nus]
        assert all(b > a for a, b in zip(k1s, k1s[1:]))

    def test_dispatch_view(self):
        b = stability_bounds(params(1.0), make_grid(10, 10, 1.0))
        assert b.regime == "unconditional"
        assert b.k_limits == ()
        assert b.alpha_max == 0.5
        b = stability_bounds(params(0.0, wd=0.0), make_grid(10, 10, 1.0), 1.0)
        assert b.regime == "conditional"
        assert len(b.k_limits) == 5 and len(b.betas) == 5
        assert b.alpha_max >= 0.0


class TestCheckStep:
    def test_satisfied(self):
        p = params(0.0, nu=0.1, wd=3.0)
        grid = make_grid(20, 4000, 1.0)  # k = 2.5e-4 below all ceilings
        v = check_step(p, grid, w_inf=5.0)
        assert v.satisfied and v.offending is None
        assert grid.k < v.k_min

    def test_violated_names_first_bound(self):
        p = params(0.0, nu=0.1, wd=3.0)
        grid = make_grid(20, 100, 1.0)  # k = 0.01 above every ceiling
        v = check_step(p, grid, w_inf=5.0)
        assert not v.satisfied
        assert v.offending == "k1"

    def test_zero_state_verdict_computable(self):
        p = params(0.0, nu=0.1, wd=3.0)
        grid = make_grid(20, 4000, 1.0)
        v = check_step(p, grid, w_inf=0.0)
        assert v.satisfied


class TestFitDecay:
    @staticmethod
    def synthetic(l2_values, T=1.0):
        # minimal stand-in: fit_decay reads only .times and .l2
        class Tr:
            pass

        tr = Tr()
        tr.l2 = np.asarray(l2_values, dtype=float)
        tr.times = np.linspace(0.0, T, tr.l2.size)
        return tr

    def test_exact_exponential(self):
        t = np.linspace(0.0, 1.0, 101)
        fit = fit_decay(self.synthetic(np.exp(-2.0 * t)))
        assert fit.alpha_hat == pytest.approx(2.0, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_constant_trajectory(self):
        fit = fit_decay(self.synthetic(np.full(50, 3.0)))
        assert fit.alpha_hat == pytest.approx(0.0, abs=1e-12)

    def test_window_selection(self):
        # growth in the first half must not contaminate a tail-only fit
        t = np.linspace(0.0, 1.0, 201)
        vals = np.where(t < 0.5, np.exp(10 * t), np.exp(5.0) * np.exp(-3 * (t - 0.5)))
        fit = fit_decay(self.synthetic(vals), window_fraction=0.4)
        assert fit.alpha_hat == pytest.approx(3.0, abs=1e-8)
        assert fit.window[0] >= 0.59

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            fit_decay(self.synthetic([1.0, 0.5]))
        with pytest.raises(InsufficientDataError):
            fit_decay(self.synthetic(np.zeros(100)))

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            fit_decay(self.synthetic(np.ones(10)), window_fraction=0.0)

    def test_controlled_run_decays(self):
        grid = make_grid(100, 1000, 1.0)
        traj = run(InitialCondition(kind="quadratic5"), grid, params(1.0))
        fit = fit_decay(traj)
        assert fit.alpha_hat > 0.0
        assert fit.r_squared > 0.9


class TestRunMonitors:
    def test_conditional_run_records_verdicts(self):
        p = params(0.0, nu=0.1, wd=3.0)
        grid = make_grid(20, 4000, 1.0)
        traj = run(InitialCondition(kind="cosine2"), grid, p)
        assert traj.bound_checks is not None
        assert len(traj.bound_checks) == traj.levels
        assert all(v.satisfied for v in traj.bound_checks)

    def test_unconditional_run_has_no_verdicts(self):
        grid = make_grid(20, 10, 1.0)
        traj = run(InitialCondition(kind="quadratic5"), grid, params(1.0))
        assert traj.bound_checks is None

    def test_monitors_off(self):
        p = params(0.0, nu=0.1, wd=3.0)
        grid = make_grid(20, 4000, 1.0)
        traj = run(InitialCondition(kind="cosine2"), grid, p, monitors=False)
        assert traj.bound_checks is None
