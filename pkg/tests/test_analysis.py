import math

import numpy as np
import pytest

from burgers_feedback import (InitialCondition, ModelParams,
                              StateField, StudyPlan, controller_error,
                              make_grid, run, run_study, spatial_self_error,
                              temporal_self_error, truncation_errors,
                              truncation_study)
from burgers_feedback.analysis import _order
from burgers_feedback.stepper import RunTrajectory

P51 = ModelParams(nu=1.0, wd=5.0, c0=1.0, c1=1.0, theta=1.0)
QUAD = InitialCondition(kind="quadratic5")


def synthetic_traj(grid, history, params=P51, g0=None, gN=None):
    m1 = history.shape[0]
    zeros = np.zeros(m1)
    return RunTrajectory(
        grid=grid, params=params, controlled=True,
        times=np.arange(m1) * grid.k, l2=zeros.copy(), h1_semi=zeros.copy(),
        linf=zeros.copy(), w0=history[:, 0].copy(), wN=history[:, -1].copy(),
        g0=zeros.copy() if g0 is None else np.asarray(g0, dtype=float),
        gN=zeros.copy() if gN is None else np.asarray(gN, dtype=float),
        newton_iters=np.zeros(m1, dtype=int), newton_residuals=zeros.copy(),
        final=StateField(values=history[-1], time_index=m1 - 1),
        history=history)


class TestSpatialSelfError:
    def test_exact_injection_is_zero(self):
        coarse_grid = make_grid(4, 3, 1.0)
        fine_grid = make_grid(8, 3, 1.0)
        rng = np.random.default_rng(0)
        fine_hist = rng.uniform(-1, 1, (4, 9))
        coarse_hist = fine_hist[:, ::2].copy()
        a = synthetic_traj(coarse_grid, coarse_hist)
        b = synthetic_traj(fine_grid, fine_hist)
        assert spatial_self_error(a, b) == (0.0, 0.0)
        assert spatial_self_error(a, b, sample="all") == (0.0, 0.0)

    def test_positive_when_restrictions_differ(self):
        coarse_grid = make_grid(4, 3, 1.0)
        fine_grid = make_grid(8, 3, 1.0)
        rng = np.random.default_rng(1)
        fine_hist = rng.uniform(-1, 1, (4, 9))
        coarse_hist = fine_hist[:, ::2].copy()
        coarse_hist[-1, 2] += 0.25
        a = synthetic_traj(coarse_grid, coarse_hist)
        b = synthetic_traj(fine_grid, fine_hist)
        err_inf, err_l2 = spatial_self_error(a, b)
        assert err_inf == pytest.approx(0.25, rel=1e-14)
        assert 0.0 < err_l2 <= err_inf

    def test_requires_doubled_resolution(self):
        a = synthetic_traj(make_grid(4, 3, 1.0), np.zeros((4, 5)))
        b = synthetic_traj(make_grid(12, 3, 1.0), np.zeros((4, 13)))
        with pytest.raises(ValueError, match="double"):
            spatial_self_error(a, b)

    def test_requires_matching_steps(self):
        a = synthetic_traj(make_grid(4, 3, 1.0), np.zeros((4, 5)))
        b = synthetic_traj(make_grid(8, 6, 1.0), np.zeros((7, 9)))
        with pytest.raises(ValueError, match="M mismatch"):
            spatial_self_error(a, b)

    def test_all_sample_requires_history(self):
        a = synthetic_traj(make_grid(4, 3, 1.0), np.zeros((4, 5)))
        b = synthetic_traj(make_grid(8, 3, 1.0), np.zeros((4, 9)))
        b.history = None
        with pytest.raises(ValueError, match="store_history"):
            spatial_self_error(a, b, sample="all")

    def test_all_sample_sees_early_levels(self):
        coarse_grid = make_grid(4, 3, 1.0)
        fine_grid = make_grid(8, 3, 1.0)
        fine_hist = np.zeros((4, 9))
        coarse_hist = fine_hist[:, ::2].copy()
        coarse_hist[0, 1] = 0.5  # differs only at the first level
        a = synthetic_traj(coarse_grid, coarse_hist)
        b = synthetic_traj(fine_grid, fine_hist)
        assert spatial_self_error(a, b) == (0.0, 0.0)
        assert spatial_self_error(a, b, sample="all")[0] == 0.5


class TestTemporalSelfError:
    def test_level_doubling_comparison(self):
        grid_c = make_grid(4, 2, 1.0)
        grid_f = make_grid(4, 4, 1.0)
        rng = np.random.default_rng(2)
        fine_hist = rng.uniform(-1, 1, (5, 5))
        coarse_hist = fine_hist[::2].copy()
        a = synthetic_traj(grid_c, coarse_hist)
        b = synthetic_traj(grid_f, fine_hist)
        assert temporal_self_error(a, b) == (0.0, 0.0)
        assert temporal_self_error(a, b, sample="all") == (0.0, 0.0)

    def test_requires_equal_n(self):
        a = synthetic_traj(make_grid(4, 2, 1.0), np.zeros((3, 5)))
        b = synthetic_traj(make_grid(8, 4, 1.0), np.zeros((5, 9)))
        with pytest.raises(ValueError, match="N mismatch"):
            temporal_self_error(a, b)

    def test_requires_doubled_steps(self):
        a = synthetic_traj(make_grid(4, 2, 1.0), np.zeros((3, 5)))
        b = synthetic_traj(make_grid(4, 6, 1.0), np.zeros((7, 5)))
        with pytest.raises(ValueError, match="double"):
            temporal_self_error(a, b)


class TestControllerError:
    def test_zero_trajectories(self):
        a = synthetic_traj(make_grid(4, 2, 1.0), np.zeros((3, 5)))
        b = synthetic_traj(make_grid(8, 2, 1.0), np.zeros((3, 9)))
        assert controller_error(a, b) == (0.0, 0.0)

    def test_max_over_levels(self):
        g0a = np.array([3.0, 1.0, 0.0])
        g0b = np.array([1.0, 1.0, 0.0])
        gNa = np.array([0.0, 0.0, 0.5])
        gNb = np.array([0.0, 0.0, 0.2])
        a = synthetic_traj(make_grid(4, 2, 1.0), np.zeros((3, 5)),
                           g0=g0a, gN=gNa)
        b = synthetic_traj(make_grid(8, 2, 1.0), np.zeros((3, 9)),
                           g0=g0b, gN=gNb)
        assert controller_error(a, b) == (2.0, pytest.approx(0.3))

    def test_temporal_pairs_use_level_stride(self):
        g0a = np.array([1.0, 0.0, 0.0])
        g0b = np.array([1.0, 9.0, 0.0, 9.0, 0.0])  # odd levels ignored
        a = synthetic_traj(make_grid(4, 2, 1.0), np.zeros((3, 5)), g0=g0a)
        b = synthetic_traj(make_grid(4, 4, 1.0), np.zeros((5, 5)), g0=g0b)
        assert controller_error(a, b) == (0.0, 0.0)

    def test_incompatible_levels(self):
        a = synthetic_traj(make_grid(4, 2, 1.0), np.zeros((3, 5)))
        b = synthetic_traj(make_grid(4, 3, 1.0), np.zeros((4, 5)))
        with pytest.raises(ValueError, match="incompatible"):
            controller_error(a, b)

    def test_final_sample_ignores_early_levels(self):
        g0a = np.array([3.0, 1.0, 0.25])
        g0b = np.array([1.0, 1.0, 0.0])
        a = synthetic_traj(make_grid(4, 2, 1.0), np.zeros((3, 5)), g0=g0a)
        b = synthetic_traj(make_grid(8, 2, 1.0), np.zeros((3, 9)), g0=g0b)
        assert controller_error(a, b)[0] == 2.0
        assert controller_error(a, b, sample="final")[0] == 0.25

    def test_bad_sample(self):
        a = synthetic_traj(make_grid(4, 2, 1.0), np.zeros((3, 5)))
        with pytest.raises(ValueError, match="sample"):
            controller_error(a, a, sample="median")

    def test_lipschitz_bound_from_state_error(self):
        # the controller difference is bounded by the cubic law's Lipschitz
        # constant over the runs' boundary range times the state difference
        p = ModelParams(nu=1.0, wd=5.0, c0=1.0, c1=1.0, theta=1.0)
        a = run(QUAD, make_grid(20, 200, 1.0), p)
        b = run(QUAD, make_grid(40, 200, 1.0), p)
        err0, err1 = controller_error(a, b)
        r0 = max(np.max(np.abs(a.w0)), np.max(np.abs(b.w0)))
        r1 = max(np.max(np.abs(a.wN)), np.max(np.abs(b.wN)))
        lip0 = ((p.c0 + p.wd) + (2.0 / (3.0 * p.c0)) * r0 ** 2) / p.nu
        lip1 = ((p.c1 + p.wd) + (2.0 / (3.0 * p.c1)) * r1 ** 2) / p.nu
        state0 = np.max(np.abs(b.w0 - a.w0))
        state1 = np.max(np.abs(b.wN - a.wN))
        assert err0 <= lip0 * state0 * (1 + 1e-12)
        assert err1 <= lip1 * state1 * (1 + 1e-12)


class TestOrderHelper:
    def test_scale_invariance(self):
        errs = [1e-3, 2.5e-4, 6.25e-5]
        orders = [_order(a, b) for a, b in zip(errs, errs[1:])]
        scaled = [7.3 * e for e in errs]
        orders2 = [_order(a, b) for a, b in zip(scaled, scaled[1:])]
        assert orders == pytest.approx(orders2, rel=1e-13)
        assert orders[0] == pytest.approx(2.0, rel=1e-12)

    def test_degenerate_errors_have_no_order(self):
        assert _order(None, 1.0) is None
        assert _order(0.0, 1.0) is None
        assert _order(1.0, 0.0) is None


class TestStudyPlan:
    def test_requires_doubling(self):
        with pytest.raises(ValueError, match="double"):
            StudyPlan(mode="spatial", resolutions=[10, 20, 30],
                      fixed_other=10, ic=QUAD, params=P51, T=1.0)

    def test_requires_three_entries(self):
        with pytest.raises(ValueError, match="3"):
            StudyPlan(mode="spatial", resolutions=[10, 20],
                      fixed_other=10, ic=QUAD, params=P51, T=1.0)

    def test_rejects_unknown_mode_and_quantity(self):
        with pytest.raises(ValueError):
            StudyPlan(mode="spacetime", resolutions=[4, 8, 16],
                      fixed_other=10, ic=QUAD, params=P51, T=1.0)
        with pytest.raises(ValueError):
            StudyPlan(mode="spatial", resolutions=[4, 8, 16], fixed_other=10,
                      ic=QUAD, params=P51, T=1.0, quantity="flux")


class TestRunStudy:
    def test_zero_initial_condition_flags_orders(self):
        ic = InitialCondition(kind="tabulated", values=np.zeros(5))
        # tabulated data only fit the coarsest grid; use a state ladder on
        # the zero field via wd=0 cosine? simplest: zero data cannot refine,
        # so build the plan on the closed-form kind with zero amplitude via
        # wd-shifted cosine is nonzero; use spatial zero through controller
        # quantity on uncontrolled zero flux instead.
        plan = StudyPlan(mode="temporal", resolutions=[2, 4, 8],
                         fixed_other=4, ic=ic, params=P51, T=1.0)
        rows = run_study(plan)
        assert len(rows) == 2
        assert all(r.err_inf == 0.0 and r.err_l2 == 0.0 for r in rows)
        assert all(r.order_inf is None and r.order_l2 is None for r in rows)

    def test_rows_labeled_by_finer_resolution(self):
        plan = StudyPlan(mode="spatial", resolutions=[4, 8, 16],
                         fixed_other=20, ic=QUAD, params=P51, T=1.0)
        rows = run_study(plan)
        assert [r.resolution for r in rows] == [8, 16]
        assert rows[0].order_inf is None
        assert rows[1].order_inf is not None

    def test_parallel_matches_serial(self):
        plan = StudyPlan(mode="spatial", resolutions=[4, 8, 16],
                         fixed_other=20, ic=QUAD, params=P51, T=1.0)
        serial = run_study(plan, jobs=1)
        parallel = run_study(plan, jobs=3)
        for a, b in zip(serial, parallel):
            assert a == b

    def test_controller_quantity_rows(self):
        plan = StudyPlan(mode="spatial", resolutions=[4, 8, 16],
                         fixed_other=20, ic=QUAD, params=P51, T=1.0,
                         quantity="controller")
        rows = run_study(plan)
        assert [r.resolution for r in rows] == [8, 16]
        assert rows[0].err_x0 > 0.0 and rows[0].err_x1 > 0.0

    def test_failed_run_annotates_row(self):
        # theta=0 with absurd k blows up; the study must not abort
        p = ModelParams(nu=0.1, wd=3.0, c0=1.0, c1=1.0, theta=0.0)
        ic = InitialCondition(kind="cosine2")
        plan = StudyPlan(mode="spatial", resolutions=[8, 16, 32],
                         fixed_other=10, ic=ic, params=p, T=1.0)
        rows = run_study(plan)
        assert all("failed" in r.note for r in rows)
        assert all(math.isnan(r.err_inf) for r in rows)


class TestTemporalControllerOrders:
    def test_final_sample_orders_match_scheme_order(self):
        # controller accuracy in time follows the state: first order at
        # theta=1 across the ladder; second order at theta=1/2 once the
        # startup oscillation has decayed out of the coarse run (finest row)
        ladder = [100, 200, 400, 800, 1600, 3200]
        ic = InitialCondition(kind="quadratic5")
        p1 = ModelParams(nu=1.0, wd=5.0, c0=1.0, c1=1.0, theta=1.0)
        rows = run_study(StudyPlan(
            mode="temporal", resolutions=ladder, fixed_other=100, ic=ic,
            params=p1, T=1.0, quantity="controller", sample="final"), jobs=2)
        by_res = {r.resolution: r for r in rows}
        for res in (800, 1600, 3200):
            assert by_res[res].order_x0 == pytest.approx(1.0, abs=0.2)
            assert by_res[res].order_x1 == pytest.approx(1.0, abs=0.2)

        ph = ModelParams(nu=1.0, wd=5.0, c0=1.0, c1=1.0, theta=0.5)
        rows = run_study(StudyPlan(
            mode="temporal", resolutions=ladder, fixed_other=100, ic=ic,
            params=ph, T=1.0, quantity="controller", sample="final"), jobs=2)
        finest = {r.resolution: r for r in rows}[3200]
        assert finest.order_x0 == pytest.approx(2.0, abs=0.2)
        assert finest.order_x1 == pytest.approx(2.0, abs=0.2)


class TestTemporalOrderContrast:
    def test_crank_nicolson_orders_exceed_implicit(self):
        # on the same ladder the theta=1/2 observed orders sit well above
        # the theta=1 ones (second versus first order in time)
        ladder = [100, 200, 400, 800]
        orders = {}
        for theta, col in ((0.5, "order_inf"), (1.0, "order_l2")):
            p = ModelParams(nu=1.0, wd=5.0, c0=1.0, c1=1.0, theta=theta)
            plan = StudyPlan(mode="temporal", resolutions=ladder,
                             fixed_other=100, ic=QUAD, params=p, T=1.0)
            rows = run_study(plan, jobs=2)
            orders[theta] = [getattr(r, col) for r in rows
                             if getattr(r, col) is not None]
        assert np.median(orders[0.5]) > np.median(orders[1.0]) + 0.5


class TestTruncation:
    def test_spatial_orders(self):
        rows = truncation_study("spatial", theta=1.0, sizes=[16, 32, 64, 128])
        assert rows[-1].interior_order == pytest.approx(2.0, abs=0.1)
        assert rows[-1].boundary_order == pytest.approx(1.0, abs=0.15)

    def test_temporal_orders_crank_nicolson_vs_implicit(self):
        rows_cn = truncation_study("temporal", theta=0.5,
                                   sizes=[16, 32, 64, 128])
        rows_be = truncation_study("temporal", theta=1.0,
                                   sizes=[16, 32, 64, 128])
        assert rows_cn[-1].interior_order == pytest.approx(2.0, abs=0.1)
        assert rows_be[-1].interior_order == pytest.approx(1.0, abs=0.1)

    def test_errors_are_finite_and_positive(self):
        grid = make_grid(32, 1, 1.0 / 32 ** 2)
        p = ModelParams(nu=0.7, wd=2.0, c0=1.0, c1=1.0, theta=1.0)
        interior, boundary = truncation_errors(grid, p)
        assert 0.0 < interior < 1.0
        assert 0.0 < boundary < 1.0

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            truncation_study("spacetime", theta=1.0, sizes=[8, 16])
