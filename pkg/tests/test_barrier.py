import numpy as np
import pytest

from ratvcbf.barrier import (BoundSchedule, ParamEstimate,
                             eval_force_box, force_box_value,
                             gamma_condition_check, issf_margin, tightening)
from ratvcbf.plant import SysState


def static_schedule(lo=8.0, up=12.0, t_end=10.0):
    return BoundSchedule([0.0, t_end], [lo, lo], [up, up])


def make_est(theta=(1000.0, 10.0), Gamma=None, vartheta=(0.0, 0.0)):
    return ParamEstimate(theta, np.eye(2) if Gamma is None else Gamma, vartheta)


class TestBoundSchedule:
    def test_rejects_crossed_bounds(self):
        with pytest.raises(ValueError):
            BoundSchedule([0.0, 1.0], [10.0, 10.0], [9.0, 12.0])

    def test_rejects_unsorted_breakpoints(self):
        with pytest.raises(ValueError):
            BoundSchedule([0.0, 0.0], [1.0, 1.0], [2.0, 2.0])

    def test_interpolation(self):
        sched = BoundSchedule([0.0, 1.0, 2.0], [8.0, 9.0, 9.0], [12.0, 14.0, 14.0])
        lo, up = sched.bounds(0.5)
        assert lo == pytest.approx(8.5)
        assert up == pytest.approx(13.0)

    def test_right_sided_derivative_at_breakpoint(self):
        sched = BoundSchedule([0.0, 1.0, 2.0], [8.0, 9.0, 9.0], [12.0, 14.0, 14.0])
        dlo, dup = sched.derivatives(1.0)
        assert dlo == pytest.approx(0.0)
        assert dup == pytest.approx(0.0)
        dlo, dup = sched.derivatives(0.999)
        assert dlo == pytest.approx(1.0)
        assert dup == pytest.approx(2.0)

    def test_out_of_domain(self):
        sched = static_schedule()
        with pytest.raises(ValueError):
            sched.bounds(11.0)
        with pytest.raises(ValueError):
            sched.bounds(-0.5)

    def test_sample_matches_scalar_calls(self):
        sched = BoundSchedule([0.0, 1.0, 3.0], [8.0, 9.0, 8.5], [12.0, 14.0, 13.0])
        ts = np.array([0.0, 0.4, 1.0, 2.2, 3.0])
        lo, up, dlo, dup = sched.sample(ts)
        for i, t in enumerate(ts):
            assert (lo[i], up[i]) == sched.bounds(t)
            assert (dlo[i], dup[i]) == sched.derivatives(t)


class TestEvalForceBox:
    def test_boundary_value(self):
        # estimated force exactly at the lower bound
        est = make_est()
        st = SysState([8.0 / 1000.0], [0.0])
        ev = eval_force_box(st, est, static_schedule(), 1.0)
        assert ev.h_r == pytest.approx(0.0, abs=1e-12)

    def test_apex(self):
        est = make_est()
        st = SysState([10.0 / 1000.0], [0.0])
        ev = eval_force_box(st, est, static_schedule(), 1.0)
        assert ev.h_r == pytest.approx(4.0, abs=1e-12)
        assert np.allclose(ev.dh_dx, 0.0, atol=1e-9)
        assert ev.apex_gap == pytest.approx(0.0, abs=1e-12)

    def test_hand_chain_rule(self):
        est = make_est()
        st = SysState([0.01], [0.0])
        ev = eval_force_box(st, est, static_schedule(), 0.5)
        assert ev.h_r == pytest.approx(4.0, abs=1e-12)
        assert np.allclose(ev.dh_dx, [0.0, 0.0], atol=1e-12)

    def test_sign_iff_inside(self):
        est = make_est()
        sched = static_schedule()
        for f, inside in ((7.0, False), (8.5, True), (11.9, True), (12.5, False)):
            st = SysState([f / 1000.0], [0.0])
            ev = eval_force_box(st, est, sched, 0.0)
            assert (ev.h_r > 0) == inside

    def test_swap_symmetry(self):
        # h is symmetric under reflecting the force about the corridor center
        rng = np.random.default_rng(2)
        est = make_est()
        sched = static_schedule()
        for _ in range(50):
            f = rng.uniform(5.0, 15.0)
            mirrored = 8.0 + 12.0 - f
            h1 = force_box_value(f, 8.0, 12.0)
            h2 = force_box_value(mirrored, 8.0, 12.0)
            assert h1 == pytest.approx(h2, rel=1e-12, abs=1e-12)


def random_schedule(rng):
    n = rng.integers(3, 6)
    bps = np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 2.0, n))])
    lo = rng.uniform(6.0, 10.0, n + 1)
    up = lo + rng.uniform(2.0, 6.0, n + 1)
    return BoundSchedule(bps, lo, up)


class TestGradientSuite:
    def test_finite_difference_gradients(self):
        # all partials against central differences at random samples; the step
        # is 1e-6 relative to each argument's magnitude so roundoff in the
        # difference quotient stays below the 1e-6 relative tolerance
        rng = np.random.default_rng(42)
        for _ in range(1000):
            sched = random_schedule(rng)
            est = make_est(theta=(rng.uniform(500, 2000), rng.uniform(1, 100)))
            p = rng.uniform(0.001, 0.02)
            pd = rng.uniform(-0.2, 0.2)
            # keep FD stencils inside one linear segment of the schedule
            seg = rng.integers(0, sched.breakpoints.size - 1)
            t0, t1 = sched.breakpoints[seg], sched.breakpoints[seg + 1]
            t = rng.uniform(t0 + 1e-4, t1 - 1e-4)
            st = SysState([p], [pd])
            ev = eval_force_box(st, est, sched, t)

            def h_at(p_, pd_, th_, t_):
                return eval_force_box(SysState([p_], [pd_]),
                                      make_est(theta=th_), sched, t_).h_r

            th = tuple(est.theta_hat)
            args = [p, pd, th[0], th[1], t]

            def fd(i):
                eps = 1e-6 * max(1.0, abs(args[i]))
                hi = list(args)
                lo = list(args)
                hi[i] += eps
                lo[i] -= eps
                return (h_at(hi[0], hi[1], (hi[2], hi[3]), hi[4])
                        - h_at(lo[0], lo[1], (lo[2], lo[3]), lo[4])) / (2 * eps)

            got = [ev.dh_dx[0], ev.dh_dx[1], ev.dh_dtheta[0], ev.dh_dtheta[1], ev.dh_dt]
            for i, g in enumerate(got):
                f = fd(i)
                if abs(f) < 1e-3:
                    assert abs(g - f) < 1e-6
                else:
                    assert abs(g - f) / abs(f) < 1e-6


class TestTightening:
    def test_zero_error(self):
        assert tightening(make_est(vartheta=(0.0, 0.0))) == 0.0

    def test_identity_gain(self):
        assert tightening(make_est(vartheta=(3.0, 4.0))) == pytest.approx(12.5)

    def test_diagonal_gain(self):
        est = make_est(Gamma=np.diag([2.0, 8.0]), vartheta=(2.0, 4.0))
        assert tightening(est) == pytest.approx(2.0)

    def test_scaling_invariance(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            A = rng.normal(size=(2, 2))
            Gamma = A @ A.T + 0.5 * np.eye(2)
            vt = rng.uniform(0, 5, 2)
            c = rng.uniform(0.1, 10)
            t1 = tightening(make_est(Gamma=Gamma, vartheta=vt))
            t2 = tightening(make_est(Gamma=c * Gamma, vartheta=np.sqrt(c) * vt))
            assert t2 == pytest.approx(t1, rel=1e-9)

    def test_singular_gain_rejected(self):
        with pytest.raises(ValueError):
            make_est(Gamma=np.zeros((2, 2)))


class TestIssfMargin:
    def test_zero_disturbance(self):
        assert issf_margin(0.0, 1.0, 4.0) == 0.0

    def test_unit_substitution(self):
        assert issf_margin(1.0, 1.0, 4.0) == pytest.approx(1.0)

    def test_formula_value(self):
        assert issf_margin(3.0, 2.0, 0.8) == pytest.approx(0.9)

    def test_monotonicity(self):
        vals = [issf_margin(d, 2.0, 0.8) for d in (0.0, 0.5, 1.0, 2.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert issf_margin(1.0, 2.0, 1.6) > issf_margin(1.0, 2.0, 0.8)
        assert issf_margin(1.0, 4.0, 0.8) < issf_margin(1.0, 2.0, 0.8)

    def test_rejects_bad_gain(self):
        with pytest.raises(ValueError):
            issf_margin(1.0, 0.0, 1.0)


class TestGammaCondition:
    def test_zero_error_always_true(self):
        assert gamma_condition_check(make_est(vartheta=(0.0, 0.0)), 5.0)
        assert gamma_condition_check(make_est(vartheta=(0.0, 0.0)), -1.0)

    def test_boundary_equality(self):
        est = make_est(Gamma=5.0 * np.eye(2), vartheta=(1.0, 0.0))
        assert gamma_condition_check(est, 0.1)

    def test_violated(self):
        est = make_est(Gamma=np.eye(2), vartheta=(2.0, 0.0))
        assert not gamma_condition_check(est, 0.1)

    def test_nonpositive_h_with_error(self):
        est = make_est(vartheta=(1.0, 0.0))
        assert not gamma_condition_check(est, 0.0)
        assert not gamma_condition_check(est, -2.0)
