"""Acceptance criteria for the safety-filter artifact.

Each test enforces one criterion at its stated tolerance and prints a
PASS line (visible with pytest -s); a failed assertion is the FAIL line.
Criteria 1-3 carry wall-clock budgets that are asserted as well.
"""

import time

import numpy as np
import pytest

from ratvcbf.barrier import (BoundSchedule, ParamEstimate, eval_force_box,
                             issf_margin)
from ratvcbf.harness import RunConfig, compare, run
from ratvcbf.plant import SysState, regressor
from ratvcbf.adaptation import tau
from ratvcbf.safety_filter import QPInfeasibleError, kkt_residual, solve_qp
from ratvcbf.scenario import ScenarioConfig, build_bound_schedule
from ratvcbf.smid import ParamBox, RegressionDatum, grid_extremes, update, \
    vartheta_from_box

MODES = ("tvcbf", "ratvcbf", "ratvcbf_smid")


@pytest.fixture(scope="module")
def default_bundle():
    return build_bound_schedule(ScenarioConfig())


@pytest.fixture(scope="module")
def comparison(default_bundle):
    start = time.perf_counter()
    result = compare(RunConfig(seed=0))
    result["elapsed"] = time.perf_counter() - start
    return result


def _transition_windows(log, slope_tol=1e-9):
    sched_moving = np.abs(np.gradient(log.column("f_lower"))) > slope_tol
    return sched_moving


def test_criterion_1_baseline_violation(default_bundle):
    """TVCBF with the paper's parameter mismatch violates the force bounds."""
    start = time.perf_counter()
    log, summary = run(RunConfig(mode="tvcbf", seed=0), default_bundle)
    elapsed = time.perf_counter() - start
    assert summary.min_h_r < 0.0
    active = np.arange(len(log)) >= log.activation_index
    violating = (log.column("h_r") < 0.0) & active
    moving = _transition_windows(log)
    assert np.any(violating & moving), "no violation inside an edge transition"
    assert elapsed < 30.0
    print(f"\nACCEPTANCE 1 PASS baseline violation: min_h={summary.min_h_r:.3f}, "
          f"violations={summary.violation_ticks}, runtime={elapsed:.1f}s")


def test_criterion_2_robust_invariance(default_bundle):
    """Robust adaptive mode keeps the robust set membership nonnegative."""
    worst = np.inf
    for seed in range(20):
        _, summary = run(RunConfig(mode="ratvcbf", seed=seed), default_bundle)
        worst = min(worst, summary.min_robust_h)
        assert summary.min_robust_h >= -1e-6, f"seed {seed}"
    print(f"\nACCEPTANCE 2 PASS robust invariance: min robust_h over 20 seeds "
          f"= {worst:.4g} >= -1e-6")


def test_criterion_3_smid_conservatism(comparison):
    """Identification cuts the conservatism of the robust mode by 30-60 percent."""
    report = comparison["report"]
    red = report["conservatism_reduction_percent"]
    assert red >= 20.0
    assert 30.0 <= red <= 60.0
    for mode in ("ratvcbf", "ratvcbf_smid"):
        assert report["modes"][mode]["min_robust_h"] >= -1e-6
    assert comparison["elapsed"] < 60.0
    print(f"\nACCEPTANCE 3 PASS conservatism reduction: {red:.1f}% "
          f"(runtime {comparison['elapsed']:.1f}s)")


def _synthetic_batch(rng, theta, n=5, noise_frac=0.6, precision=0.08):
    batch = []
    for _ in range(n):
        D = np.vstack([np.zeros(2),
                       rng.uniform(0.3, 1.0, 2) * rng.choice([-1.0, 1.0], 2)])
        Y = D @ theta + rng.uniform(-noise_frac, noise_frac) * precision \
            * np.array([0.0, 1.0])
        batch.append(RegressionDatum(Y, D, 0.0))
    return batch


def test_criterion_4_smid_soundness(comparison):
    """Nested boxes containing the truth, nonincreasing error bound, LP = oracle."""
    log = comparison["logs"]["ratvcbf_smid"]
    sc = ScenarioConfig()
    theta_true = np.asarray(sc.theta_true)
    lo_k, lo_b = log.column("box_lower_k"), log.column("box_lower_b")
    up_k, up_b = log.column("box_upper_k"), log.column("box_upper_b")
    assert np.all(np.diff(lo_k) >= -1e-12) and np.all(np.diff(lo_b) >= -1e-12)
    assert np.all(np.diff(up_k) <= 1e-12) and np.all(np.diff(up_b) <= 1e-12)
    assert np.all((lo_k <= theta_true[0] + 1e-9) & (theta_true[0] <= up_k + 1e-9))
    assert np.all((lo_b <= theta_true[1] + 1e-9) & (theta_true[1] <= up_b + 1e-9))
    assert comparison["report"]["modes"]["ratvcbf_smid"]["smid_inconsistency_count"] == 0

    # error bound never grows across an update at a fixed estimate
    th = np.column_stack([log.column("theta_hat_k"), log.column("theta_hat_b")])
    updates = np.where(np.diff(lo_k) + np.diff(up_k) != 0.0)[0]
    for j in updates:
        old_box = ParamBox([lo_k[j], lo_b[j]], [up_k[j], up_b[j]])
        new_box = ParamBox([lo_k[j + 1], lo_b[j + 1]], [up_k[j + 1], up_b[j + 1]])
        theta = new_box.clamp(th[j + 1])
        assert np.all(vartheta_from_box(new_box, theta)
                      <= vartheta_from_box(old_box, theta) + 1e-9)

    # interval refinements match the dense-grid oracle on synthetic problems
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 100:
        theta = rng.uniform(0.5, 2.0, 2)
        box = ParamBox(theta - 1.0, theta + 1.0)
        batch = _synthetic_batch(rng, theta)
        new, ok = update(box, batch, 0.08)
        if not ok:
            continue
        oracle = grid_extremes(box, batch, 0.08, grid=2001)
        assert oracle is not None
        cell = (box.upper - box.lower) / 2000.0
        assert np.all(np.abs(new.lower - oracle[0]) <= cell + 1e-12)
        assert np.all(np.abs(new.upper - oracle[1]) <= cell + 1e-12)
        checked += 1
    print("\nACCEPTANCE 4 PASS SMID soundness: nested boxes contain the truth; "
          "100 LP refinements match the grid oracle within one cell")


def test_criterion_5_qp_optimality():
    """KKT residuals below 1e-9 and grid-search optimality on random QPs."""
    rng = np.random.default_rng(77)
    n_checked = 0
    worst_kkt = 0.0
    for k in range(10_000):
        dim = 1 if k % 2 == 0 else 2
        u_nom = rng.uniform(-5, 5, dim)
        a = rng.uniform(-3, 3, dim)
        if rng.uniform() < 0.02:
            a = np.zeros(dim)
        b = rng.uniform(-6, 6)
        box = None
        if k % 3 != 0:
            box = (rng.uniform(-8, -1, dim), rng.uniform(1, 8, dim))
        try:
            res = solve_qp(u_nom, a, b, box)
        except QPInfeasibleError:
            if np.all(a == 0.0):
                assert b > 0
            else:
                umax = np.where(a > 0, box[1], np.where(a < 0, box[0], 0.0))
                assert float(a @ umax) < b + 1e-6
            continue
        worst_kkt = max(worst_kkt, kkt_residual(res.u_safe, res.mu, u_nom, a, b, box))
        in_box = box is None or np.all((u_nom >= box[0]) & (u_nom <= box[1]))
        if float(a @ u_nom) >= b and in_box:
            assert np.array_equal(res.u_safe, u_nom), "inactive must return u_nom"
        if box is not None and dim == 1 and k % 5 == 0:
            grid = np.linspace(box[0][0], box[1][0], 4001)
            feas = grid[a[0] * grid >= b]
            if feas.size:
                best = feas[np.argmin((feas - u_nom[0]) ** 2)]
                f_opt = (res.u_safe[0] - u_nom[0]) ** 2
                f_grid = (best - u_nom[0]) ** 2
                step = (box[1][0] - box[0][0]) / 4000.0
                assert f_opt <= f_grid + 1e-9
                assert f_grid - f_opt <= 2 * step * (abs(best - u_nom[0]) + step) + 1e-9
        n_checked += 1
    assert worst_kkt < 1e-9
    print(f"\nACCEPTANCE 5 PASS QP optimality: {n_checked} instances, "
          f"worst KKT residual {worst_kkt:.2e} < 1e-9")


def test_criterion_6_gradient_suite():
    """Barrier partials match central finite differences on 1000 samples."""
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(1000):
        n = rng.integers(3, 6)
        bps = np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 2.0, n))])
        lo = rng.uniform(6.0, 10.0, n + 1)
        sched = BoundSchedule(bps, lo, lo + rng.uniform(2.0, 6.0, n + 1))
        theta = (rng.uniform(500, 2000), rng.uniform(1, 100))
        est = ParamEstimate(theta, np.eye(2), (0.0, 0.0))
        p = rng.uniform(0.001, 0.02)
        pd = rng.uniform(-0.2, 0.2)
        seg = rng.integers(0, sched.breakpoints.size - 1)
        t = rng.uniform(sched.breakpoints[seg] + 1e-4,
                        sched.breakpoints[seg + 1] - 1e-4)
        ev = eval_force_box(SysState([p], [pd]), est, sched, t)

        def h_at(args):
            p_, pd_, k_, b_, t_ = args
            e = ParamEstimate((k_, b_), np.eye(2), (0.0, 0.0))
            return eval_force_box(SysState([p_], [pd_]), e, sched, t_).h_r

        base = [p, pd, theta[0], theta[1], t]
        got = [ev.dh_dx[0], ev.dh_dx[1], ev.dh_dtheta[0], ev.dh_dtheta[1], ev.dh_dt]
        for i in range(5):
            eps = 1e-6 * max(1.0, abs(base[i]))
            hi_args = list(base)
            lo_args = list(base)
            hi_args[i] += eps
            lo_args[i] -= eps
            fd = (h_at(hi_args) - h_at(lo_args)) / (2 * eps)
            if abs(fd) < 1e-3:
                assert abs(got[i] - fd) < 1e-6
            else:
                rel = abs(got[i] - fd) / abs(fd)
                worst = max(worst, rel)
                assert rel < 1e-6
    print(f"\nACCEPTANCE 6 PASS gradient suite: worst relative error {worst:.2e} < 1e-6")


def test_criterion_7_reduction_identities():
    """Margin-free robust mode is bit-identical to the plain baseline."""
    sc = ScenarioConfig(theta_hat0=(1400.0, 70.0), vartheta0=(0.0, 0.0),
                        delta=0.0, disturbance_kind="zero")
    bundle = build_bound_schedule(sc)
    log_ra, _ = run(RunConfig(scenario=sc, mode="ratvcbf", filter_delta=0.0), bundle)
    log_tv, _ = run(RunConfig(scenario=sc, mode="tvcbf", C=0.0, filter_delta=0.0),
                    bundle)
    for key in ("p", "p_dot", "u_safe", "f_c_true", "h_r", "robust_h"):
        assert np.array_equal(log_ra.column(key), log_tv.column(key)), key

    assert issf_margin(0.0, 60.0, 0.8) == 0.0

    rng = np.random.default_rng(5)
    for _ in range(200):
        st = SysState([rng.uniform(0, 0.05)], [rng.uniform(-0.3, 0.3)])
        m_o = rng.uniform(0.5, 5.0)
        ev = eval_force_box(
            SysState([rng.uniform(0.004, 0.012)], [rng.uniform(-0.1, 0.1)]),
            ParamEstimate((1000.0, 10.0), np.eye(2), (0.0, 0.0)),
            BoundSchedule([0.0, 1.0], [8.0, 8.0], [12.0, 12.0]),
            0.5)
        # apex: zero state gradient forces a zero update direction
        apex = type(ev)(h_r=1.0, dh_dx=np.zeros(2), dh_dtheta=ev.dh_dtheta,
                        dh_dt=0.0)
        assert np.all(tau(apex, st, m_o) == 0.0)
        # proof cross term with the exact update direction
        dh_dx = rng.normal(size=2) * 10
        dh_dtheta = rng.normal(size=2)
        A = rng.normal(size=(2, 2))
        Gamma = A @ A.T + 0.1 * np.eye(2)
        theta_err = rng.uniform(-500, 500, 2)
        ev2 = type(ev)(h_r=1.0, dh_dx=dh_dx, dh_dtheta=dh_dtheta, dh_dt=0.0)
        F = regressor(st, m_o)
        cross = (dh_dtheta @ Gamma + theta_err) @ ((dh_dx @ F) + tau(ev2, st, m_o))
        assert abs(cross) < 1e-12
    print("\nACCEPTANCE 7 PASS reduction identities: bit-identical trajectories, "
          "gamma(0)=0, tau(apex)=0, cross term < 1e-12")


def test_criterion_8_mrr_band_guarantee(comparison):
    """Nonnegative measured-force barrier implies the removal-rate band, exactly."""
    sc = ScenarioConfig(reference="center", warm_start=True,
                        theta_hat0=(1400.0, 70.0), vartheta0=(0.0, 0.0))
    log, summary = run(RunConfig(scenario=sc, mode="ratvcbf", seed=0))
    h = log.column("h_r")
    assert np.all(h >= 0.0), "warm-start run must stay inside the corridor"
    mrr = log.column("mrr_true")
    lo_band = (1.0 - sc.mrr_band_frac) * sc.mrr_desired
    up_band = (1.0 + sc.mrr_band_frac) * sc.mrr_desired
    tol = 1e-9 * sc.mrr_desired
    assert np.all(mrr >= lo_band - tol) and np.all(mrr <= up_band + tol)

    # per-tick implication on every comparison run
    for mode in MODES:
        clog = comparison["logs"][mode]
        inside = clog.column("h_r") >= 0.0
        cm = clog.column("mrr_true")
        assert np.all(cm[inside] >= lo_band - tol)
        assert np.all(cm[inside] <= up_band + tol)
    print("\nACCEPTANCE 8 PASS removal-rate band: in-corridor ticks keep the rate "
          "within +-10% of target (1e-9 relative)")
