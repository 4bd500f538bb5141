"""Time-varying force-box barrier and its robustness margins.

The barrier h = (f_hat - f_lower(t)) * (f_upper(t) - f_hat) is positive exactly
when the estimated contact force sits strictly inside the admissible corridor.
Evaluation returns the value together with its gradients w.r.t. state,
parameter estimate, and explicit time, which the safety filter contracts with
the plant structure.  Robustness enters through two scalars:

* tightening: 0.5 * vartheta' Gamma^-1 vartheta, the set shrinkage that covers
  the worst-case parameter estimation error, and
* issf_margin: the safe-set inflation gamma(delta) that accounts for a bounded
  input disturbance under a linear class-K gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ratvcbf.plant import SysState, contact_force


@dataclass
class BoundSchedule:
    """Piecewise-linear admissible force corridor f_lower(t) < f_upper(t).

    Derivatives are taken from the segment to the right of t (one-sided at
    breakpoints); the last segment's slope extends to the final breakpoint.
    """

    breakpoints: np.ndarray
    lower_vals: np.ndarray
    upper_vals: np.ndarray

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.lower_vals = np.asarray(self.lower_vals, dtype=float)
        self.upper_vals = np.asarray(self.upper_vals, dtype=float)
        if self.breakpoints.ndim != 1 or self.breakpoints.size < 2:
            raise ValueError("schedule needs at least two breakpoints")
        if not (self.lower_vals.shape == self.upper_vals.shape == self.breakpoints.shape):
            raise ValueError("breakpoints and bound values must align")
        if np.any(np.diff(self.breakpoints) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(self.lower_vals >= self.upper_vals):
            raise ValueError("lower bound must stay below upper bound")
        self._lo_slopes = np.diff(self.lower_vals) / np.diff(self.breakpoints)
        self._up_slopes = np.diff(self.upper_vals) / np.diff(self.breakpoints)

    @property
    def t_start(self) -> float:
        return float(self.breakpoints[0])

    @property
    def t_end(self) -> float:
        return float(self.breakpoints[-1])

    def _check_domain(self, t: float):
        if t < self.t_start - 1e-12 or t > self.t_end + 1e-12:
            raise ValueError(
                f"t={t} outside schedule domain [{self.t_start}, {self.t_end}]")

    def _segment(self, t: float) -> int:
        i = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        return min(max(i, 0), self.breakpoints.size - 2)

    def bounds(self, t: float) -> tuple[float, float]:
        self._check_domain(t)
        i = self._segment(t)
        w = t - self.breakpoints[i]
        return (float(self.lower_vals[i] + w * self._lo_slopes[i]),
                float(self.upper_vals[i] + w * self._up_slopes[i]))

    def derivatives(self, t: float) -> tuple[float, float]:
        self._check_domain(t)
        i = self._segment(t)
        return float(self._lo_slopes[i]), float(self._up_slopes[i])

    def sample(self, times: np.ndarray):
        """Vectorized (lower, upper, lower_slope, upper_slope) at many times."""
        times = np.asarray(times, dtype=float)
        if times.size and (times.min() < self.t_start - 1e-12
                           or times.max() > self.t_end + 1e-12):
            raise ValueError("sample times outside schedule domain")
        idx = np.clip(np.searchsorted(self.breakpoints, times, side="right") - 1,
                      0, self.breakpoints.size - 2)
        w = times - self.breakpoints[idx]
        return (self.lower_vals[idx] + w * self._lo_slopes[idx],
                self.upper_vals[idx] + w * self._up_slopes[idx],
                self._lo_slopes[idx], self._up_slopes[idx])


@dataclass
class ParamEstimate:
    """Parameter estimate [k_hat, b_hat], adaptive gain, and max possible error.

    vartheta bounds |theta_true_i - theta_hat_i| elementwise; the closed loop
    keeps it consistent with the current set-membership box.
    """

    theta_hat: np.ndarray
    Gamma: np.ndarray
    vartheta: np.ndarray

    def __post_init__(self):
        self.theta_hat = np.atleast_1d(np.asarray(self.theta_hat, dtype=float))
        self.vartheta = np.atleast_1d(np.asarray(self.vartheta, dtype=float))
        self.Gamma = np.asarray(self.Gamma, dtype=float)
        k = self.theta_hat.size
        if self.Gamma.shape != (k, k):
            raise ValueError(f"Gamma must be {k}x{k}, got {self.Gamma.shape}")
        if not np.allclose(self.Gamma, self.Gamma.T, atol=1e-10):
            raise ValueError("Gamma must be symmetric")
        if self.vartheta.shape != self.theta_hat.shape:
            raise ValueError("vartheta must match theta_hat in dimension")
        if np.any(self.vartheta < 0.0):
            raise ValueError("vartheta must be elementwise nonnegative")
        try:
            self._chol = np.linalg.cholesky(self.Gamma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("Gamma must be positive definite") from exc

    def gamma_inv(self, v: np.ndarray) -> np.ndarray:
        """Solve Gamma x = v through the cached Cholesky factor."""
        y = np.linalg.solve(self._chol, v)
        return np.linalg.solve(self._chol.T, y)

    def lambda_min(self) -> float:
        return float(np.linalg.eigvalsh(self.Gamma)[0])


@dataclass
class BarrierEval:
    """Barrier value and partials at one (state, estimate, time) triple."""

    h_r: float
    dh_dx: np.ndarray      # row, length 2n over [p, p_dot]
    dh_dtheta: np.ndarray  # row, length 2n over [k_hat, b_hat]
    dh_dt: float
    apex_gap: float = np.nan  # signed force gap from the estimate to the corridor midpoint


def eval_force_box(state: SysState, est: ParamEstimate,
                   schedule: BoundSchedule, t: float) -> BarrierEval:
    """Evaluate the force-box barrier with the estimated parameters at time t."""
    if state.n_axes != 1:
        raise NotImplementedError(
            "the force-box barrier is per-axis; stack one barrier per axis")
    k_hat = est.theta_hat[0]
    b_hat = est.theta_hat[1]
    f_hat = float(contact_force(state, k_hat, b_hat)[0])
    f_lo, f_up = schedule.bounds(t)
    dlo, dup = schedule.derivatives(t)

    h = (f_hat - f_lo) * (f_up - f_hat)
    # chain rule through f_hat; d h / d f_hat = f_up + f_lo - 2 f_hat
    c = f_up + f_lo - 2.0 * f_hat
    dh_dx = np.array([c * k_hat, c * b_hat])
    dh_dtheta = np.array([c * state.p[0], c * state.p_dot[0]])
    dh_dt = -dlo * (f_up - f_hat) + dup * (f_hat - f_lo)
    out = BarrierEval(h_r=float(h), dh_dx=dh_dx, dh_dtheta=dh_dtheta,
                      dh_dt=float(dh_dt), apex_gap=float(0.5 * c))
    if not (np.isfinite(out.h_r) and np.isfinite(out.dh_dt)
            and np.all(np.isfinite(dh_dx)) and np.all(np.isfinite(dh_dtheta))):
        raise ValueError("barrier evaluation produced non-finite values")
    return out


def force_box_value(f: float, f_lo: float, f_up: float) -> float:
    """Barrier value for a directly measured force (no estimate involved)."""
    return (f - f_lo) * (f_up - f)


def tightening(est: ParamEstimate) -> float:
    """Safe-set shrinkage 0.5 * vartheta' Gamma^-1 vartheta covering estimation error."""
    return float(0.5 * est.vartheta @ est.gamma_inv(est.vartheta))


def issf_margin(delta: float, alpha0: float, issf_epsilon: float) -> float:
    """Disturbance inflation gamma(delta) = issf_epsilon * delta^2 / (4 alpha0).

    This is the closed form of -alpha_inv(-issf_epsilon * delta^2 / 4) for the
    linear class-K family alpha(s) = alpha0 * s.
    """
    if not alpha0 > 0.0:
        raise ValueError(f"alpha0 must be positive, got {alpha0}")
    if not issf_epsilon > 0.0:
        raise ValueError(f"issf_epsilon must be positive, got {issf_epsilon}")
    if delta < 0.0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    return issf_epsilon * delta * delta / (4.0 * alpha0)


def gamma_condition_check(est: ParamEstimate, h_r: float) -> bool:
    """Adaptive-gain condition lambda_min(Gamma) >= |vartheta|^2 / (2 h_r).

    Vacuously true when vartheta = 0; false on or outside the barrier boundary
    (h_r <= 0) with a nonzero error bound.
    """
    norm_sq = float(est.vartheta @ est.vartheta)
    if norm_sq == 0.0:
        return True
    if h_r <= 0.0:
        return False
    return est.lambda_min() >= norm_sq / (2.0 * h_r)
