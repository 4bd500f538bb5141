"""Closed-loop experiment runner and output emission.

Wires plant, barrier, estimator, set-membership identification, and the QP
filter into one deterministic loop per controller mode, then computes the
comparison metrics (constraint violations, conservatism as the mean measured
barrier value, removal-rate band compliance).

Two barrier readings are logged per tick: h_r is evaluated with the true plant
parameters (the measured-force barrier that the treatment guarantee is about,
and what the figures show), while h_r_est and robust_h carry the filter's own
estimate-parameter barrier and its robust certificate value.  The baseline
mode engages when the measured force first reaches the corridor; the robust
modes engage when their robust set membership first turns nonnegative, which
is the certificate's initial condition.  Metrics are taken over the engaged
part of a run.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from ratvcbf import smid
from ratvcbf.barrier import ParamEstimate, gamma_condition_check, issf_margin
from ratvcbf.plant import DisturbanceSpec, TruePlant, disturbance_series
from ratvcbf.safety_filter import (MODE_RATVCBF, MODE_RATVCBF_SMID, MODE_TVCBF,
                                   MODES, FilterConfig, QPInfeasibleError,
                                   solve_qp)
from ratvcbf.scenario import ScenarioBundle, ScenarioConfig, build_bound_schedule
from ratvcbf.smid import ParamBox, update, vartheta_from_box


@dataclass
class RunConfig:
    """One experiment: a scenario, a controller mode, and run-level knobs."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    mode: str = MODE_RATVCBF
    seed: int = 0
    C: float = 0.0
    input_box: tuple | None = None
    alpha0: float | None = None
    filter_delta: float | None = None
    issf_epsilon: float | None = None

    def __post_init__(self):
        self.mode = self.mode.replace("-", "_").lower()
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def filter_config(self) -> FilterConfig:
        sc = self.scenario
        return FilterConfig(
            mode=self.mode,
            alpha0=self.alpha0 if self.alpha0 is not None else sc.alpha0,
            C=self.C,
            delta=self.filter_delta if self.filter_delta is not None else sc.filter_delta,
            issf_epsilon=self.issf_epsilon if self.issf_epsilon is not None else sc.issf_epsilon,
            tightening_backoff=sc.tightening_backoff,
            input_box=self.input_box,
        )


# CSV column order; vector quantities are flattened with _k/_b suffixes.
CSV_FIELDS = [
    "t", "p", "p_dot", "f_c_true", "f_c_est", "f_lower", "f_upper",
    "h_r", "h_r_est", "robust_h", "u_nominal", "u_safe", "d",
    "theta_hat_k", "theta_hat_b", "vartheta_k", "vartheta_b",
    "box_lower_k", "box_lower_b", "box_upper_k", "box_upper_b",
    "infeasible_flag", "mrr_true",
]


@dataclass
class SimLog:
    mode: str
    dt: float
    data: dict
    activation_index: int = -1

    @classmethod
    def allocate(cls, n: int, mode: str, dt: float) -> "SimLog":
        return cls(mode=mode, dt=dt,
                   data={name: np.zeros(n) for name in CSV_FIELDS})

    def __len__(self) -> int:
        return self.data["t"].shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[name]

    def active_slice(self) -> slice:
        if self.activation_index < 0:
            return slice(0, 0)
        return slice(self.activation_index, len(self))

    def as_matrix(self) -> np.ndarray:
        return np.column_stack([self.data[name] for name in CSV_FIELDS])


@dataclass
class RunSummary:
    mode: str
    activation_time: float
    min_h_r: float
    min_robust_h: float
    violation_ticks: int
    mean_h: float
    mrr_in_band_fraction: float
    infeasible_ticks: int
    smid_inconsistency_count: int
    record_count: int
    final_theta_hat: tuple
    final_vartheta: tuple
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _initial_box(sc: ScenarioConfig) -> ParamBox:
    theta0 = np.asarray(sc.theta_hat0, dtype=float)
    vt0 = sc.vartheta_init()
    lower = theta0 - vt0
    lower[0] = min(max(lower[0], 0.0), theta0[0])
    lower[1] = min(max(lower[1], sc.damping_floor), theta0[1])
    return ParamBox(lower, theta0 + vt0)


def _startup_estimate(sc: ScenarioConfig, box: ParamBox) -> ParamEstimate:
    theta0 = np.asarray(sc.theta_hat0, dtype=float)
    if not box.contains(theta0):
        raise ValueError("initial estimate must lie inside the parameter box")
    Gamma = np.diag(np.asarray(sc.gamma_gain, dtype=float))
    return ParamEstimate(theta0, Gamma, vartheta_from_box(box, theta0))


def _validate_gain_condition(est: ParamEstimate, bundle: ScenarioBundle):
    """Abort before simulating when the adaptive gain cannot support the error bound.

    Checked at the corridor-center operating point of the initial schedule
    sample, where the barrier is at its apex.
    """
    lo, up = bundle.schedule.bounds(0.0)
    apex = ((up - lo) / 2.0) ** 2
    if not gamma_condition_check(est, apex):
        need = float(est.vartheta @ est.vartheta) / (2.0 * apex)
        raise ValueError(
            "adaptive gain too small for the initial error bound: "
            f"need lambda_min(Gamma) >= {need:.1f}, have {est.lambda_min():.1f}; "
            "raise gamma_gain or shrink vartheta0")


def run(run_cfg: RunConfig, bundle: ScenarioBundle | None = None) -> tuple[SimLog, RunSummary]:
    """Simulate the closed loop for one mode; deterministic given the seed.

    The tick loop below is a scalar transcription of the module composition
    (barrier evaluation, constraint assembly, QP projection, estimator step,
    RK4) for the single-axis scenario with a diagonal adaptive gain; it mirrors
    the modules' arithmetic so the per-tick results agree with filter_step and
    step_estimator (pinned by tests/test_harness.py::test_loop_matches_modules).
    """
    sc = run_cfg.scenario
    if bundle is None:
        bundle = build_bound_schedule(sc)
    fcfg = run_cfg.filter_config()
    if fcfg.input_box is not None:
        u_lo, u_hi = float(fcfg.input_box[0][0]), float(fcfg.input_box[1][0])
    else:
        u_lo, u_hi = -math.inf, math.inf
    robust = fcfg.robust
    use_smid = fcfg.mode == MODE_RATVCBF_SMID

    plant = TruePlant(sc.theta_true[0], sc.theta_true[1], sc.m_o)
    kk, bb = float(plant.k[0]), float(plant.b[0])
    m_o = float(sc.m_o)
    inv_m = 1.0 / m_o
    neg_inv = -1.0 / m_o
    dt = float(sc.dt)
    dt6 = dt / 6.0
    half = 0.5 * dt
    n_ticks = int(round(sc.run_duration() / dt)) + 1
    times = np.arange(n_ticks) * dt

    dspec = DisturbanceSpec(delta=sc.delta, kind=sc.disturbance_kind,
                            frequency=sc.disturbance_frequency,
                            seed=run_cfg.seed, tick_dt=dt, n_axes=1)
    d_arr = disturbance_series(dspec, times)[:, 0]
    lo_arr, up_arr, dlo_arr, dup_arr = bundle.schedule.sample(times)
    fref_arr = np.interp(times, bundle.times, bundle.f_ref_vals)
    area_arr = np.interp(times, bundle.times, bundle.areas)

    box = _initial_box(sc)
    est = _startup_estimate(sc, box)
    if robust:
        _validate_gain_condition(est, bundle)
    gamma0, gamma1 = float(est.Gamma[0, 0]), float(est.Gamma[1, 1])
    if abs(est.Gamma[0, 1]) > 0.0 or abs(est.Gamma[1, 0]) > 0.0:
        raise NotImplementedError("the closed-loop runner assumes a diagonal adaptive gain")
    ig0, ig1 = 1.0 / gamma0, 1.0 / gamma1
    th_k, th_b = float(est.theta_hat[0]), float(est.theta_hat[1])
    bl_k, bl_b = float(box.lower[0]), float(box.lower[1])
    bu_k, bu_b = float(box.upper[0]), float(box.upper[1])
    vt_k = max(th_k - bl_k, bu_k - th_k)
    vt_b = max(th_b - bl_b, bu_b - th_b)
    gam = issf_margin(fcfg.delta, fcfg.alpha0, fcfg.issf_epsilon) if robust else 0.0
    alpha0 = float(fcfg.alpha0)
    backoff = float(fcfg.tightening_backoff)
    delta_f = float(fcfg.delta)
    const = float(fcfg.C) if not robust else 0.0
    gain = float(sc.nominal_gain)
    k_p, w = float(sc.k_p), float(sc.tool_speed)
    batch_size = int(sc.smid_batch)
    precision = float(sc.smid_precision)

    if sc.warm_start:
        p = 0.5 * (float(lo_arr[0]) + float(up_arr[0])) / kk
    else:
        p = 0.0
    p_dot = 0.0

    log = SimLog.allocate(n_ticks, fcfg.mode, dt)
    col = log.data
    c_t, c_p, c_pd = col["t"], col["p"], col["p_dot"]
    c_ft, c_fe = col["f_c_true"], col["f_c_est"]
    c_lo, c_up = col["f_lower"], col["f_upper"]
    c_h, c_he, c_rh = col["h_r"], col["h_r_est"], col["robust_h"]
    c_un, c_us, c_d = col["u_nominal"], col["u_safe"], col["d"]
    c_tk, c_tb = col["theta_hat_k"], col["theta_hat_b"]
    c_vk, c_vb = col["vartheta_k"], col["vartheta_b"]
    c_blk, c_blb = col["box_lower_k"], col["box_lower_b"]
    c_buk, c_bub = col["box_upper_k"], col["box_upper_b"]
    c_inf, c_mrr = col["infeasible_flag"], col["mrr_true"]

    buffer: list = []
    inconsistency = 0
    infeasible_total = 0
    active = False

    for j in range(n_ticks):
        t = float(times[j])
        d = float(d_arr[j])
        lo = float(lo_arr[j])
        up = float(up_arr[j])
        f_true = kk * p + bb * p_dot
        f_est = th_k * p + th_b * p_dot
        h_true = (f_true - lo) * (up - f_true)
        # force-box barrier at the estimate (mirrors eval_force_box)
        h_est = (f_est - lo) * (up - f_est)
        c = up + lo - 2.0 * f_est
        dh1 = c * th_b
        dh_dt = -float(dlo_arr[j]) * (up - f_est) + float(dup_arr[j]) * (f_est - lo)
        if robust:
            tight = 0.5 * (vt_k * (vt_k * ig0) + vt_b * (vt_b * ig1))
            robust_h = h_est - tight + gam
            membership = robust_h
        else:
            tight = 0.0
            robust_h = h_est
            membership = h_true
        if not active and membership >= 0.0:
            active = True
            log.activation_index = j

        u_nom = gain * (float(fref_arr[j]) - f_true) + float(fref_arr[j])
        infeasible = 0.0
        u_safe = u_nom
        if active:
            # constraint row and rhs (mirrors assemble_constraint)
            a = dh1 * inv_m
            lfh = (c * th_k) * p_dot
            lFh_k = dh1 * (p * neg_inv)
            lFh_b = dh1 * (p_dot * neg_inv)
            param_drift = lFh_k * th_k + lFh_b * th_b
            if robust:
                eta = abs(a) * delta_f
                # capped-stride estimator credit (mirrors _drift_credit via
                # effective_stride: scale to the apex, then box-clamp)
                s_k = dt * (gamma0 * -(lFh_k))
                s_b = dt * (gamma1 * -(lFh_b))
                df = s_k * p + s_b * p_dot
                if df != 0.0:
                    scale = (0.5 * c) / df
                    if scale < 1.0:
                        s_k *= scale
                        s_b *= scale
                s_k = min(max(th_k + s_k, bl_k), bu_k) - th_k
                s_b = min(max(th_b + s_b, bl_b), bu_b) - th_b
                df = s_k * p + s_b * p_dot
                credit = -((c * p) * s_k + (c * p_dot) * s_b - df * df) / dt
            else:
                eta = 0.0
                credit = 0.0
            b = (-alpha0 * (h_est - (1.0 + backoff) * tight + gam) - const
                 + eta - dh_dt - lfh - param_drift + credit)
            # 1-D QP projection (mirrors solve_qp without an input box)
            if a == 0.0:
                if b > 1e-9:
                    infeasible = 1.0
                    infeasible_total += 1
                    u_safe = min(max(u_nom, u_lo), u_hi)
            elif a * u_nom >= b - 1e-9:
                u_safe = u_nom
            else:
                u_safe = u_nom + a * ((b - a * u_nom) / (a * a))
            if infeasible == 0.0 and fcfg.input_box is not None:
                try:
                    res = solve_qp(np.array([u_nom]), np.array([a]), b, fcfg.input_box)
                    u_safe = float(res.u_safe[0])
                except QPInfeasibleError:
                    infeasible = 1.0
                    infeasible_total += 1
                    u_safe = min(max(u_nom, u_lo), u_hi)

        c_t[j] = t
        c_p[j] = p
        c_pd[j] = p_dot
        c_ft[j] = f_true
        c_fe[j] = f_est
        c_lo[j] = lo
        c_up[j] = up
        c_h[j] = h_true
        c_he[j] = h_est
        c_rh[j] = robust_h
        c_un[j] = u_nom
        c_us[j] = u_safe
        c_d[j] = d
        c_tk[j] = th_k
        c_tb[j] = th_b
        c_vk[j] = vt_k
        c_vb[j] = vt_b
        c_blk[j] = bl_k
        c_blb[j] = bl_b
        c_buk[j] = bu_k
        c_bub[j] = bu_b
        c_inf[j] = infeasible
        c_mrr[j] = k_p * f_true * w / float(area_arr[j])
        if j == n_ticks - 1:
            break

        if use_smid:
            p_ddot = (-kk * p - bb * p_dot + u_safe + d) / m_o
            datum = smid.RegressionDatum(
                Y=np.array([0.0, p_ddot - inv_m * u_safe]),
                D=np.array([[0.0, 0.0], [p * neg_inv, p_dot * neg_inv]]),
                t=t)
            buffer.append(datum)
            if len(buffer) == batch_size:
                new_box, ok = update(box, buffer, precision)
                buffer = []
                if ok:
                    box = new_box
                    bl_k, bl_b = float(box.lower[0]), float(box.lower[1])
                    bu_k, bu_b = float(box.upper[0]), float(box.upper[1])
                    th_k = min(max(th_k, bl_k), bu_k)
                    th_b = min(max(th_b, bl_b), bu_b)
                else:
                    inconsistency += 1

        if robust:
            # estimator step (mirrors tau + step_estimator with the apex cap);
            # dh1 is the tick-start gradient, from before any box projection
            s_k = dt * (gamma0 * -(dh1 * (p * neg_inv)))
            s_b = dt * (gamma1 * -(dh1 * (p_dot * neg_inv)))
            df = s_k * p + s_b * p_dot
            if df != 0.0:
                scale = (0.5 * c) / df
                if scale < 1.0:
                    s_k *= scale
                    s_b *= scale
            th_k = min(max(th_k + s_k, bl_k), bu_k)
            th_b = min(max(th_b + s_b, bl_b), bu_b)
            vt_k = max(th_k - bl_k, bu_k - th_k)
            vt_b = max(th_b - bl_b, bu_b - th_b)

        # RK4 on the contact plant (mirrors step_rk4 with held u, d)
        k1p = p_dot
        k1v = (-kk * p - bb * p_dot + u_safe + d) / m_o
        p2 = p + half * k1p
        v2 = p_dot + half * k1v
        k2v = (-kk * p2 - bb * v2 + u_safe + d) / m_o
        p3 = p + half * v2
        v3 = p_dot + half * k2v
        k3v = (-kk * p3 - bb * v3 + u_safe + d) / m_o
        p4 = p + dt * v3
        v4 = p_dot + dt * k3v
        k4v = (-kk * p4 - bb * v4 + u_safe + d) / m_o
        p = p + (k1p + 2.0 * v2 + 2.0 * v3 + v4) * dt6
        p_dot = p_dot + (k1v + 2.0 * k2v + 2.0 * k3v + k4v) * dt6

    return log, _summarize(log, run_cfg, inconsistency, infeasible_total)


def _summarize(log: SimLog, run_cfg: RunConfig, inconsistency: int,
               infeasible_total: int) -> RunSummary:
    sc = run_cfg.scenario
    sl = log.active_slice()
    h = log.column("h_r")[sl]
    rh = log.column("robust_h")[sl]
    mrr = log.column("mrr_true")[sl]
    engaged = h.size > 0
    band = sc.mrr_band_frac * sc.mrr_desired
    in_band = np.abs(mrr - sc.mrr_desired) <= band * (1.0 + 1e-9)
    finite = all(np.all(np.isfinite(v)) for v in log.data.values())
    min_robust = float(rh.min()) if engaged else math.nan
    robust_mode = run_cfg.mode != MODE_TVCBF
    passed = finite and engaged and (not robust_mode or min_robust >= -1e-6)
    return RunSummary(
        mode=log.mode,
        activation_time=(log.activation_index * log.dt
                         if log.activation_index >= 0 else math.nan),
        min_h_r=float(h.min()) if engaged else math.nan,
        min_robust_h=min_robust,
        violation_ticks=int(np.sum(h < 0.0)),
        mean_h=float(h.mean()) if engaged else math.nan,
        mrr_in_band_fraction=float(in_band.mean()) if engaged else math.nan,
        infeasible_ticks=infeasible_total,
        smid_inconsistency_count=inconsistency,
        record_count=len(log),
        final_theta_hat=(float(log.column("theta_hat_k")[-1]),
                         float(log.column("theta_hat_b")[-1])),
        final_vartheta=(float(log.column("vartheta_k")[-1]),
                        float(log.column("vartheta_b")[-1])),
        passed=passed,
    )


def compare(configs) -> dict:
    """Run the three modes on one scenario and report the comparison metrics.

    Accepts a single RunConfig (expanded over the modes) or a dict
    mode -> RunConfig; mismatched schedules, seeds, or gains are rejected.
    """
    if isinstance(configs, RunConfig):
        base = configs
        configs = {}
        for mode in MODES:
            cfg = RunConfig(scenario=base.scenario, mode=mode, seed=base.seed,
                            C=base.C, input_box=base.input_box, alpha0=base.alpha0,
                            filter_delta=base.filter_delta,
                            issf_epsilon=base.issf_epsilon)
            configs[mode] = cfg
    missing = [m for m in MODES if m not in configs]
    if missing:
        raise ValueError(f"compare needs configs for all modes, missing {missing}")

    bundles = {m: build_bound_schedule(c.scenario) for m, c in configs.items()}
    ref = bundles[MODE_TVCBF]
    for m, bnd in bundles.items():
        if not (np.array_equal(bnd.schedule.breakpoints, ref.schedule.breakpoints)
                and np.array_equal(bnd.schedule.lower_vals, ref.schedule.lower_vals)
                and np.array_equal(bnd.schedule.upper_vals, ref.schedule.upper_vals)):
            raise ValueError(f"schedule of mode {m} differs from the baseline schedule")
        if configs[m].seed != configs[MODE_TVCBF].seed:
            raise ValueError("compare requires identical seeds across modes")
        if configs[m].filter_config().alpha0 != configs[MODE_TVCBF].filter_config().alpha0:
            raise ValueError("compare requires identical class-K gains across modes")

    logs, summaries = {}, {}
    for mode in MODES:
        log, summary = run(configs[mode], bundles[mode])
        logs[mode] = log
        summaries[mode] = summary

    mean_ra = summaries[MODE_RATVCBF].mean_h
    mean_smid = summaries[MODE_RATVCBF_SMID].mean_h
    reduction = 100.0 * (mean_ra - mean_smid) / mean_ra if mean_ra else math.nan
    report = {
        "modes": {m: s.to_dict() for m, s in summaries.items()},
        "conservatism_reduction_percent": reduction,
        "mrr_in_band": {m: s.mrr_in_band_fraction for m, s in summaries.items()},
        "pass": bool(all(s.passed for m, s in summaries.items() if m != MODE_TVCBF)),
    }
    return {"report": report, "logs": logs, "summaries": summaries}


def write_trace_csv(log: SimLog, path: str):
    mat = log.as_matrix()
    with open(path, "w") as fh:
        fh.write(",".join(CSV_FIELDS) + "\n")
        if mat.shape[0]:
            np.savetxt(fh, mat, fmt="%.9g", delimiter=",")


def read_trace_csv(path: str) -> tuple[list, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        body = fh.read()
    if not body.strip():
        return header, np.zeros((0, len(header)))
    rows = np.atleast_2d(np.loadtxt(body.strip().splitlines(), delimiter=","))
    return header, rows


def _plot_panels(logs: dict, out_dir: str, band: tuple):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    styles = {MODE_TVCBF: dict(color="tab:red", label="TVCBF"),
              MODE_RATVCBF: dict(color="tab:blue", label="RaTVCBF"),
              MODE_RATVCBF_SMID: dict(color="tab:green", label="RaTVCBF+SMID")}
    any_log = next(iter(logs.values()))
    t = any_log.column("t")

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(t, any_log.column("f_lower"), "k--", lw=1, label="force bounds")
    ax.plot(t, any_log.column("f_upper"), "k--", lw=1)
    for mode, log in logs.items():
        ax.plot(log.column("t"), log.column("f_c_true"), **styles.get(mode, {}))
    ax.set_xlabel("time [s]")
    ax.set_ylabel("contact force [N]")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "fig_force.svg"))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.axhline(0.0, color="k", lw=1)
    for mode, log in logs.items():
        ax.plot(log.column("t"), log.column("h_r"), **styles.get(mode, {}))
    ax.set_xlabel("time [s]")
    ax.set_ylabel("barrier value")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "fig_h.svg"))
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.axhline(band[0], color="k", ls="--", lw=1)
    ax.axhline(band[1], color="k", ls="--", lw=1)
    for mode, log in logs.items():
        ax.plot(log.column("t"), log.column("mrr_true"), **styles.get(mode, {}))
    ax.set_xlabel("time [s]")
    ax.set_ylabel("material removal rate")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "fig_mrr.svg"))
    plt.close(fig)


def emit_outputs(log: SimLog, summary: RunSummary, out_dir: str,
                 scenario: ScenarioConfig | None = None):
    """Write trace_<mode>.csv, summary.json, and the three figure panels."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        write_trace_csv(log, os.path.join(out_dir, f"trace_{log.mode}.csv"))
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
        sc = scenario if scenario is not None else ScenarioConfig()
        band = ((1.0 - sc.mrr_band_frac) * sc.mrr_desired,
                (1.0 + sc.mrr_band_frac) * sc.mrr_desired)
        _plot_panels({log.mode: log}, out_dir, band)
    except OSError as exc:
        raise OSError(f"failed writing outputs under {out_dir!r}: {exc}") from exc


def emit_comparison(result: dict, out_dir: str, scenario: ScenarioConfig):
    """Write per-mode traces and summaries plus overlay panels and the report."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        for mode, log in result["logs"].items():
            write_trace_csv(log, os.path.join(out_dir, f"trace_{mode}.csv"))
            with open(os.path.join(out_dir, f"summary_{mode}.json"), "w") as fh:
                json.dump(result["summaries"][mode].to_dict(), fh, indent=2,
                          sort_keys=True)
        with open(os.path.join(out_dir, "comparison.json"), "w") as fh:
            json.dump(result["report"], fh, indent=2, sort_keys=True)
        band = ((1.0 - scenario.mrr_band_frac) * scenario.mrr_desired,
                (1.0 + scenario.mrr_band_frac) * scenario.mrr_desired)
        _plot_panels(result["logs"], out_dir, band)
    except OSError as exc:
        raise OSError(f"failed writing outputs under {out_dir!r}: {exc}") from exc
