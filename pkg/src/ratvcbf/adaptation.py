"""Safety-oriented parameter estimator.

The update direction tau is the barrier gradient pulled back through the plant
regressor; driving the estimate with Gamma * tau makes the cross term in the
composite-barrier derivative vanish, so the estimator serves the safety
certificate rather than tracking.  The estimate is clamped into the current
set-membership box after every step.
"""

from __future__ import annotations

import numpy as np

from ratvcbf.barrier import BarrierEval, ParamEstimate
from ratvcbf.plant import SysState, regressor
from ratvcbf.smid import ParamBox


def tau(ev: BarrierEval, state: SysState, m_o: float) -> np.ndarray:
    """Update direction -(dh_dx @ F(x))^T; zero at the barrier apex and at x = 0."""
    return -(ev.dh_dx @ regressor(state, m_o))


def lambda_eff(est: ParamEstimate, ev: BarrierEval) -> np.ndarray:
    """Effective parameter theta_hat - Gamma @ dh_dtheta^T used in the filter drift."""
    return est.theta_hat - est.Gamma @ ev.dh_dtheta


def effective_stride(est: ParamEstimate, tau_vec: np.ndarray, dt: float,
                     box: ParamBox, state: SysState | None = None,
                     apex_gap: float | None = None) -> np.ndarray:
    """Parameter stride the estimator will actually apply this tick.

    The raw Euler stride dt * Gamma @ tau is scaled back so the believed force
    stops at the barrier apex (the update law's stationary point; an uncapped
    step at a large gain jumps across it and oscillates, which the continuous
    flow never does), then clamped componentwise into the box.
    """
    stride = dt * (est.Gamma @ np.asarray(tau_vec, dtype=float))
    if state is not None and apex_gap is not None:
        df = float(stride[0] * state.p[0] + stride[1] * state.p_dot[0])
        if df != 0.0:
            scale = apex_gap / df
            if scale < 1.0:
                stride = stride * scale
    return box.clamp(est.theta_hat + stride) - est.theta_hat


def step_estimator(est: ParamEstimate, tau_vec: np.ndarray, dt: float,
                   box: ParamBox, state: SysState | None = None,
                   apex_gap: float | None = None) -> ParamEstimate:
    """Euler step theta_hat += dt * Gamma @ tau, clamped componentwise into the box.

    When the state and the signed force distance to the barrier apex are given,
    the stride is additionally capped at the apex (see effective_stride).
    Gamma and vartheta pass through unchanged; the caller refreshes vartheta
    from the box when it wants the bound consistent with the new estimate.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    theta_new = est.theta_hat + effective_stride(est, tau_vec, dt, box, state, apex_gap)
    return ParamEstimate(theta_new, est.Gamma, est.vartheta)
