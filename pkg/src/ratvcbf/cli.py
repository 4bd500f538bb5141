"""Command line interface: run one mode, compare the three, or self-check the oracles."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ratvcbf import harness
from ratvcbf.config import ConfigError, load_run_config

_CLI_MODES = {"tvcbf": "tvcbf", "ratvcbf": "ratvcbf", "ratvcbf-smid": "ratvcbf_smid"}


def _cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    if args.mode:
        cfg.mode = _CLI_MODES[args.mode]
        cfg.__post_init__()
    if args.seed is not None:
        cfg.seed = args.seed
    log, summary = harness.run(cfg)
    harness.emit_outputs(log, summary, args.out, cfg.scenario)
    print(f"mode={summary.mode} activation={summary.activation_time:.3f}s "
          f"min_h={summary.min_h_r:.4g} min_robust_h={summary.min_robust_h:.4g} "
          f"violations={summary.violation_ticks} "
          f"mrr_in_band={summary.mrr_in_band_fraction:.3f} pass={summary.passed}")
    return 0


def _cmd_compare(args) -> int:
    cfg = load_run_config(args.config)
    result = harness.compare(cfg)
    harness.emit_comparison(result, args.out, cfg.scenario)
    report = result["report"]
    for mode, summ in report["modes"].items():
        print(f"{mode:>14}: mean_h={summ['mean_h']:.4g} min_h={summ['min_h_r']:.4g} "
              f"violations={summ['violation_ticks']} "
              f"mrr_in_band={summ['mrr_in_band_fraction']:.3f}")
    print(f"conservatism reduction: {report['conservatism_reduction_percent']:.1f}% "
          f"pass={report['pass']}")
    return 0


def _selftest() -> int:
    """Quick property oracles; returns the number of failures."""
    from ratvcbf import barrier, plant, smid
    from ratvcbf.safety_filter import solve_qp
    from ratvcbf.scenario import ScenarioConfig, contact_area

    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    rng = np.random.default_rng(7)

    # disturbance stays inside its bound
    spec = plant.DisturbanceSpec(delta=0.4, kind="sinusoid_plus_uniform",
                                 frequency=3.0, seed=1)
    d = plant.disturbance_series(spec, np.arange(100000) * 1e-3)
    check("disturbance sup-norm bound", float(np.max(np.abs(d))) <= 0.4 + 1e-15)

    # RK4 convergence order on the contact plant
    pl = plant.TruePlant([1400.0], [70.0], 1.0)
    err = []
    for dt in (4e-3, 2e-3):
        st = plant.SysState([0.01], [0.0])
        fine = plant.SysState([0.01], [0.0])
        for _ in range(int(round(0.2 / dt))):
            st = plant.step_rk4(st, pl, [5.0], [0.0], dt)
        for _ in range(int(round(0.2 / 1e-5))):
            fine = plant.step_rk4(fine, pl, [5.0], [0.0], 1e-5)
        err.append(abs(st.p[0] - fine.p[0]))
    order = np.log2(err[0] / err[1])
    check(f"RK4 order (measured {order:.2f})", order > 3.5)

    # barrier gradients against finite differences
    sched = barrier.BoundSchedule([0.0, 1.0], [8.0, 9.0], [12.0, 13.5])
    est = barrier.ParamEstimate([1000.0, 10.0], np.eye(2), [0.0, 0.0])
    ok = True
    for _ in range(100):
        st = plant.SysState([rng.uniform(0.001, 0.02)], [rng.uniform(-0.1, 0.1)])
        t = rng.uniform(0.1, 0.9)
        ev = barrier.eval_force_box(st, est, sched, t)
        eps = 1e-6
        fd_t = (barrier.eval_force_box(st, est, sched, t + eps).h_r -
                barrier.eval_force_box(st, est, sched, t - eps).h_r) / (2 * eps)
        ok &= abs(fd_t - ev.dh_dt) <= 1e-5 * max(1.0, abs(ev.dh_dt))
    check("barrier time-gradient finite differences", ok)

    # QP solutions satisfy KKT and beat a feasible grid
    ok = True
    for _ in range(200):
        u_nom = rng.uniform(-5, 5, size=1)
        a = rng.uniform(-3, 3, size=1)
        b = rng.uniform(-5, 5)
        lo, hi = np.array([-6.0]), np.array([6.0])
        try:
            res = solve_qp(u_nom, a, b, (lo, hi))
        except Exception:
            continue
        grid = np.linspace(lo[0], hi[0], 2001)
        feas = grid[a[0] * grid >= b]
        if feas.size:
            best = feas[np.argmin((feas - u_nom[0]) ** 2)]
            ok &= (res.u_safe[0] - u_nom[0]) ** 2 <= (best - u_nom[0]) ** 2 + 1e-9
    check("QP against grid oracle", ok)

    # interval identification against its grid oracle
    ok = True
    for _ in range(10):
        theta = rng.uniform(0.5, 2.0, size=2)
        box = smid.ParamBox(theta - 1.0, theta + 1.0)
        batch = []
        for _ in range(5):
            D = np.vstack([np.zeros(2), rng.uniform(0.3, 1.0, 2) * rng.choice([-1, 1], 2)])
            Y = D @ theta + rng.uniform(-0.05, 0.05, 2)
            batch.append(smid.RegressionDatum(Y, D, 0.0))
        new_box, feas = smid.update(box, batch, 0.08)
        oracle = smid.grid_extremes(box, batch, 0.08, grid=801)
        if feas and oracle is not None:
            cell = (box.upper - box.lower) / 800
            ok &= bool(np.all(np.abs(new_box.lower - oracle[0]) <= cell + 1e-12))
            ok &= bool(np.all(np.abs(new_box.upper - oracle[1]) <= cell + 1e-12))
    check("interval identification against grid oracle", ok)

    # disc-rectangle area against Monte Carlo
    sc = ScenarioConfig()
    pts = rng.uniform(-1.0, 1.0, size=(200000, 2)) * sc.tool_radius
    center = (0.0125, 0.0125)
    inside = (np.linalg.norm(pts, axis=1) <= sc.tool_radius)
    on_plate = ((pts[:, 0] + center[0] >= 0) & (pts[:, 0] + center[0] <= sc.plate[0]) &
                (pts[:, 1] + center[1] >= 0) & (pts[:, 1] + center[1] <= sc.plate[1]))
    mc = float(np.mean(inside & on_plate)) * (2 * sc.tool_radius) ** 2
    exact = contact_area(center, sc.plate, sc.tool_radius)
    check("contact area against Monte Carlo", abs(mc - exact) / exact < 0.02)

    print(f"{6 - failures}/6 oracle checks passed")
    return failures


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ratvcbf",
        description="Robust adaptive time-varying CBF safety filtering simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one controller mode")
    p_run.add_argument("--config", default=None, help="INI config path (defaults built in)")
    p_run.add_argument("--mode", choices=sorted(_CLI_MODES), default=None)
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None)

    p_cmp = sub.add_parser("compare", help="run all three modes and compare")
    p_cmp.add_argument("--config", default=None)
    p_cmp.add_argument("--out", default="out")

    sub.add_parser("selftest", help="run the built-in property oracles")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return 1 if _selftest() else 0
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
