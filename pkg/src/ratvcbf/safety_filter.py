"""Minimally-invasive QP safety filter over the force-box barrier.

Two constraint modes share one assembly path:

* tvcbf: the plain time-varying condition.  The drift uses the current
  parameter estimate directly and the right-hand side is -K(h) - C with a
  linear K; no robustness margins.

* ratvcbf / ratvcbf_smid: the robust adaptive condition.  The safe set is
  tightened by 0.5 * vartheta' Gamma^-1 vartheta, inflated back by the
  disturbance margin gamma(delta), robustified by eta = |L_g h| * delta, and
  the parametric drift is evaluated at the effective parameter
  lambda = theta_hat - Gamma dh_dtheta^T, which pre-credits the barrier motion
  the estimator itself is about to produce.

The estimator is clamped into the set-membership box, so part of a gradient
stride can be cut off at a box face; when the box and the estimator step size
are available, the credit is computed from the clamped stride (exactly, the
barrier being quadratic in the parameters), otherwise the constraint would
certify barrier motion that never happens.  With a zero error bound (a point
box) the stride is empty, the credit vanishes, and the robust constraint
degenerates bit-for-bit to the plain one with C = 0.

The QP  min 0.5 |u - u_nominal|^2  s.t.  a u >= b  (and an optional input box)
is solved exactly: closed-form projection without the box, a breakpoint scan
over the clamped-projection curve with it.  Solutions are KKT-verified.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ratvcbf import adaptation
from ratvcbf.barrier import (BarrierEval, BoundSchedule, ParamEstimate,
                             eval_force_box, issf_margin, tightening)
from ratvcbf.plant import SysState, drift, input_matrix, regressor
from ratvcbf.smid import ParamBox

MODE_TVCBF = "tvcbf"
MODE_RATVCBF = "ratvcbf"
MODE_RATVCBF_SMID = "ratvcbf_smid"
MODES = (MODE_TVCBF, MODE_RATVCBF, MODE_RATVCBF_SMID)

_SLACK_TOL = 1e-9


class QPInfeasibleError(RuntimeError):
    """The constraint cannot be met at this state (a = 0 with b > 0, or empty box)."""


@dataclass
class FilterConfig:
    mode: str = MODE_RATVCBF
    alpha0: float = 60.0           # linear class-K gain, 1/s
    C: float = 0.0                 # additive constant of the plain condition
    delta: float = 0.0             # disturbance bound assumed by the filter, N
    issf_epsilon: float = 0.8
    tightening_backoff: float = 0.08  # constraint-side inflation of the tightening
    input_box: tuple | None = None  # (u_min, u_max) per axis

    def __post_init__(self):
        self.mode = self.mode.replace("-", "_").lower()
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.alpha0 > 0.0:
            raise ValueError("alpha0 must be positive")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")
        if self.input_box is not None:
            lo, hi = (np.atleast_1d(np.asarray(v, dtype=float)) for v in self.input_box)
            if np.any(lo >= hi):
                raise ValueError("input box must satisfy u_min < u_max")
            self.input_box = (lo, hi)

    @property
    def robust(self) -> bool:
        return self.mode != MODE_TVCBF


@dataclass
class FilterResult:
    u_safe: np.ndarray
    a: np.ndarray
    b: float
    active: bool
    slack: float
    mu: float = 0.0          # multiplier of the barrier constraint
    infeasible: bool = False
    # filled in by filter_step for logging
    h_r: float = field(default=np.nan)
    robust_h: float = field(default=np.nan)


def _drift_credit(est: ParamEstimate, ev: BarrierEval, state: SysState,
                  m_o: float, box: ParamBox | None, est_dt: float | None) -> float:
    """Barrier-motion credit of the upcoming estimator update.

    Without a box this is L_F h @ (Gamma dh_dtheta^T), i.e. the term that turns
    the parametric drift at theta_hat into the drift at the effective parameter
    lambda = theta_hat - Gamma dh_dtheta^T.  That form assumes the estimator
    will take its full gradient stride; a stride clamped at a box face credits
    barrier motion that never happens, so when the box and the estimator step
    size are known the credit is computed from the clamped stride instead, with
    the exact second-order term of the (quadratic in theta) barrier.
    """
    if box is None or est_dt is None:
        lFh = ev.dh_dx @ regressor(state, m_o)
        return float(lFh @ (est.theta_hat - adaptation.lambda_eff(est, ev)))
    tau_vec = adaptation.tau(ev, state, m_o)
    stride = adaptation.effective_stride(est, tau_vec, est_dt, box, state,
                                         apex_gap=ev.apex_gap)
    df = float(stride[0] * state.p[0] + stride[1] * state.p_dot[0])
    return -(float(ev.dh_dtheta @ stride) - df * df) / est_dt


def assemble_constraint(ev: BarrierEval, est: ParamEstimate, state: SysState,
                        t: float, cfg: FilterConfig, m_o: float,
                        box: ParamBox | None = None,
                        est_dt: float | None = None) -> tuple[np.ndarray, float]:
    """Linear constraint a @ u >= b on the force input at the current tick."""
    n = state.n_axes
    a = ev.dh_dx @ input_matrix(n, m_o)
    lfh = float(ev.dh_dx @ drift(state))
    param_drift = float((ev.dh_dx @ regressor(state, m_o)) @ est.theta_hat)

    if cfg.robust:
        # the tightening is inflated on the constraint side only; the logged
        # robust-set membership keeps the plain value.  The inflation absorbs
        # the discrete-time residual of box-clamped estimator strides and
        # vanishes with the error bound.
        tight = (1.0 + cfg.tightening_backoff) * tightening(est)
        gam = issf_margin(cfg.delta, cfg.alpha0, cfg.issf_epsilon)
        eta = float(np.linalg.norm(a)) * cfg.delta
        credit = _drift_credit(est, ev, state, m_o, box, est_dt)
        const = 0.0
    else:
        tight = 0.0
        gam = 0.0
        eta = 0.0
        credit = 0.0
        const = cfg.C

    b = (-cfg.alpha0 * (ev.h_r - tight + gam) - const
         + eta - ev.dh_dt - lfh - param_drift + credit)
    return a, b


def _project_halfspace(u_nom: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    return u_nom + a * ((b - float(a @ u_nom)) / float(a @ a))


def _solve_box_qp(u_nom: np.ndarray, a: np.ndarray, b: float,
                  lo: np.ndarray, hi: np.ndarray):
    """Exact projection of u_nom onto {a u >= b} intersected with [lo, hi].

    The optimum is clip(u_nom + mu a, lo, hi) for the smallest mu >= 0 making
    the constraint hold; phi(mu) = a @ clip(...) is piecewise linear and
    nondecreasing, so the crossing is found by a breakpoint scan.
    """
    u0 = np.clip(u_nom, lo, hi)
    if float(a @ u0) >= b - _SLACK_TOL:
        return u0, 0.0

    def curve(mu: float) -> np.ndarray:
        return np.clip(u_nom + mu * a, lo, hi)

    u_max = np.where(a > 0.0, hi, np.where(a < 0.0, lo, u0))
    if float(a @ u_max) < b - _SLACK_TOL:
        raise QPInfeasibleError(
            f"input box cannot satisfy the barrier constraint (need {b}, "
            f"best achievable {float(a @ u_max)})")

    breaks = [0.0]
    for i in range(a.size):
        if a[i] == 0.0:
            continue
        for edge in ((lo[i] - u_nom[i]) / a[i], (hi[i] - u_nom[i]) / a[i]):
            if edge > 0.0 and np.isfinite(edge):
                breaks.append(float(edge))
    breaks = sorted(set(breaks))
    mu_prev, phi_prev = 0.0, float(a @ u0)
    for mu in breaks[1:] + [None]:
        if mu is None:
            # beyond the last breakpoint every coordinate still moving has
            # slope a_i^2; the crossing is guaranteed by the u_max check
            u_prev = curve(mu_prev)
            moving = (a != 0.0) & (u_prev > lo) & (u_prev < hi)
            slope = float(np.sum(a[moving] ** 2))
            if slope == 0.0:
                # fully clamped within tolerance of b (u_max check passed)
                return u_prev, mu_prev
            mu_star = mu_prev + (b - phi_prev) / slope
            return curve(mu_star), mu_star
        phi = float(a @ curve(mu))
        if phi >= b:
            frac = 0.0 if phi == phi_prev else (b - phi_prev) / (phi - phi_prev)
            mu_star = mu_prev + frac * (mu - mu_prev)
            return curve(mu_star), mu_star
        mu_prev, phi_prev = mu, phi


def kkt_residual(u: np.ndarray, mu: float, u_nom: np.ndarray, a: np.ndarray,
                 b: float, input_box=None) -> float:
    """Max violation of the KKT system of the 1-constraint (box) QP at (u, mu)."""
    res = max(0.0, b - float(a @ u)) if a.size else 0.0
    res = max(res, -mu)
    res = max(res, abs(mu * (float(a @ u) - b)) if mu > 0.0 else 0.0)
    s = u - u_nom - mu * a
    if input_box is None:
        res = max(res, float(np.max(np.abs(s))) if s.size else 0.0)
    else:
        lo, hi = input_box
        res = max(res, float(np.max(np.maximum(lo - u, u - hi))), 0.0)
        for i in range(u.size):
            at_lo = u[i] <= lo[i] + 1e-12
            at_hi = u[i] >= hi[i] - 1e-12
            if at_lo and at_hi:
                continue
            if at_lo:
                res = max(res, -float(s[i]))     # nu_lo = s_i must be >= 0
            elif at_hi:
                res = max(res, float(s[i]))      # nu_hi = -s_i must be >= 0
            else:
                res = max(res, abs(float(s[i])))
    return res


def solve_qp(u_nominal, a, b: float, input_box=None) -> FilterResult:
    """Exact minimizer of 0.5 |u - u_nominal|^2 subject to a u >= b and the box."""
    u_nom = np.atleast_1d(np.asarray(u_nominal, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = float(b)

    if np.all(a == 0.0):
        if b > _SLACK_TOL:
            raise QPInfeasibleError(
                "constraint row is zero with positive rhs; no input can help")
        u = u_nom if input_box is None else np.clip(u_nom, *input_box)
        return FilterResult(u_safe=u, a=a, b=b, active=False,
                            slack=float(a @ u) - b)

    if input_box is None:
        if float(a @ u_nom) >= b - _SLACK_TOL:
            u, mu = u_nom.copy(), 0.0
        else:
            u = _project_halfspace(u_nom, a, b)
            mu = (b - float(a @ u_nom)) / float(a @ a)
    else:
        u, mu = _solve_box_qp(u_nom, a, b, input_box[0], input_box[1])

    res = kkt_residual(u, mu, u_nom, a, b, input_box)
    if res > 1e-8:
        raise RuntimeError(f"QP solution failed internal KKT verification ({res:.2e})")
    slack = float(a @ u) - b
    return FilterResult(u_safe=u, a=a, b=b, active=mu > 0.0, slack=slack, mu=mu)


def filter_step(state: SysState, est: ParamEstimate, schedule: BoundSchedule,
                t: float, u_nominal, cfg: FilterConfig, m_o: float,
                box: ParamBox | None = None,
                est_dt: float | None = None) -> FilterResult:
    """Evaluate the barrier, assemble the mode's constraint, and solve the QP."""
    ev = eval_force_box(state, est, schedule, t)
    a, b = assemble_constraint(ev, est, state, t, cfg, m_o, box, est_dt)
    result = solve_qp(u_nominal, a, b, cfg.input_box)
    result.h_r = ev.h_r
    if cfg.robust:
        result.robust_h = ev.h_r - tightening(est) + \
            issf_margin(cfg.delta, cfg.alpha0, cfg.issf_epsilon)
    else:
        result.robust_h = ev.h_r
    return result
