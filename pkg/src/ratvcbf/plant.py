"""Uncertain contact plant: spring-damper surface, tool mass, bounded input disturbance.

State is penetration and penetration rate per contact axis.  Contact force uses
the positive-into-surface convention, f_c = k*p + b*pdot, so the force-bound
corridor of the scenario stays positive.  The dynamics are the usual
mass-normalized force balance and are affine in (u, d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_UNIFORM_CHUNK = 4096


def _as_vector(x, name: str) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"{name} must be a scalar or 1-D vector, got shape {v.shape}")
    return v


@dataclass
class SysState:
    """Penetration p (m), penetration rate p_dot (m/s), simulation time t (s)."""

    p: np.ndarray
    p_dot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.p = _as_vector(self.p, "p")
        self.p_dot = _as_vector(self.p_dot, "p_dot")
        if self.p.shape != self.p_dot.shape:
            raise ValueError("p and p_dot must have the same dimension")

    @property
    def n_axes(self) -> int:
        return self.p.shape[0]


@dataclass
class TruePlant:
    """Ground-truth stiffness k (N/m), damping b (N s/m) per axis, tool mass m_o (kg)."""

    k: np.ndarray
    b: np.ndarray
    m_o: float = 1.0

    def __post_init__(self):
        self.k = _as_vector(self.k, "k")
        self.b = _as_vector(self.b, "b")
        if self.k.shape != self.b.shape:
            raise ValueError("k and b must have the same dimension")
        if np.any(self.k < 0.0) or np.any(self.b < 0.0):
            raise ValueError("stiffness and damping must be nonnegative")
        if not self.m_o > 0.0:
            raise ValueError(f"tool mass must be positive, got {self.m_o}")

    @property
    def theta(self) -> np.ndarray:
        """Parameter vector [k, b] stacked per axis."""
        return np.concatenate([self.k, self.b])


@dataclass
class DisturbanceSpec:
    """Bounded additive input disturbance, sup-norm <= delta after clamping.

    kind is one of "zero", "sinusoid", "sinusoid_plus_uniform".  The uniform
    component is indexed by the controller tick (t / tick_dt) from a seeded
    stream, so a sample is a pure function of (spec, t).
    """

    delta: float = 0.0
    kind: str = "zero"
    frequency: float = 1.0
    seed: int = 0
    tick_dt: float = 1e-3
    n_axes: int = 1

    def __post_init__(self):
        if self.delta < 0.0:
            raise ValueError("disturbance bound delta must be nonnegative")
        if self.kind not in ("zero", "sinusoid", "sinusoid_plus_uniform"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")


def _uniform_stream(seed: int, n: int) -> np.ndarray:
    # Prefix of a fixed seeded stream: sample j is the same no matter how many
    # samples are requested, which keeps disturbance_sample a pure function.
    size = max(_UNIFORM_CHUNK, int(np.ceil(n / _UNIFORM_CHUNK)) * _UNIFORM_CHUNK)
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=size)[:n]


def disturbance_sample(spec: DisturbanceSpec, t: float) -> np.ndarray:
    """Disturbance vector at time t, clamped to [-delta, delta] per axis."""
    return disturbance_series(spec, np.asarray([t], dtype=float))[0]


def disturbance_series(spec: DisturbanceSpec, times: np.ndarray) -> np.ndarray:
    """Vectorized disturbance samples, shape (len(times), n_axes)."""
    times = np.asarray(times, dtype=float)
    n = times.shape[0]
    if spec.kind == "zero" or spec.delta == 0.0:
        return np.zeros((n, spec.n_axes))
    sin_part = np.sin(2.0 * np.pi * spec.frequency * times)
    if spec.kind == "sinusoid":
        d = spec.delta * sin_part
    else:
        ticks = np.rint(times / spec.tick_dt).astype(np.int64)
        stream = _uniform_stream(spec.seed, int(ticks.max()) + 1 if n else 0)
        d = spec.delta * (0.7 * sin_part + 0.6 * stream[ticks])
    d = np.clip(d, -spec.delta, spec.delta)
    return np.repeat(d[:, None], spec.n_axes, axis=1)


def contact_force(state: SysState, k, b) -> np.ndarray:
    """Spring-damper contact force per axis, positive pushing into the surface."""
    k = _as_vector(k, "k")
    b = _as_vector(b, "b")
    if np.any(k < 0.0) or np.any(b < 0.0):
        raise ValueError("stiffness and damping must be nonnegative")
    if not (np.all(np.isfinite(state.p)) and np.all(np.isfinite(state.p_dot))
            and np.all(np.isfinite(k)) and np.all(np.isfinite(b))):
        raise ValueError("contact_force requires finite inputs")
    return k * state.p + b * state.p_dot


def drift(state: SysState) -> np.ndarray:
    """Parameter-free drift term of the state derivative, [p_dot, 0]."""
    return np.concatenate([state.p_dot, np.zeros_like(state.p)])


def regressor(state: SysState, m_o: float) -> np.ndarray:
    """Regressor F(x) with F(0) = 0: the state derivative is drift + F(x) @ [k, b] + g u.

    Rows follow the state layout [p, p_dot]; only the acceleration rows are
    populated, with the sign that makes the contact force oppose penetration.
    """
    n = state.n_axes
    F = np.zeros((2 * n, 2 * n))
    F[n:, :n] = np.diag(state.p) * (-1.0 / m_o)
    F[n:, n:] = np.diag(state.p_dot) * (-1.0 / m_o)
    return F


def input_matrix(n_axes: int, m_o: float) -> np.ndarray:
    """Input map g: force input enters the acceleration rows scaled by 1/m_o."""
    g = np.zeros((2 * n_axes, n_axes))
    g[n_axes:, :] = np.eye(n_axes) / m_o
    return g


def dynamics(state: SysState, plant: TruePlant, u, d=None) -> np.ndarray:
    """State derivative [p_dot, p_ddot] under force input u and disturbance d."""
    u = _as_vector(u, "u")
    if not plant.m_o > 0.0:
        raise ValueError("tool mass must be positive")
    d = np.zeros_like(u) if d is None else _as_vector(d, "d")
    p_ddot = (-plant.k * state.p - plant.b * state.p_dot + u + d) / plant.m_o
    return np.concatenate([state.p_dot, p_ddot])


def step_rk4(state: SysState, plant: TruePlant, u, d, dt: float) -> SysState:
    """Classical RK4 step with u and d held constant over the step."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    n = state.n_axes

    def deriv(p, p_dot):
        return dynamics(SysState(p, p_dot, state.t), plant, u, d)

    k1 = deriv(state.p, state.p_dot)
    k2 = deriv(state.p + 0.5 * dt * k1[:n], state.p_dot + 0.5 * dt * k1[n:])
    k3 = deriv(state.p + 0.5 * dt * k2[:n], state.p_dot + 0.5 * dt * k2[n:])
    k4 = deriv(state.p + dt * k3[:n], state.p_dot + dt * k3[n:])
    inc = (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0)
    return SysState(state.p + inc[:n], state.p_dot + inc[n:], state.t + dt)
