"""Surface-treatment scenario: geometry, removal-rate pipeline, schedules, nominal control.

A disc tool of radius r sweeps a closed rectangular loop over a rectangular
plate at constant speed.  Near plate edges the tool overhangs and the contact
area shrinks, so holding the removal rate inside a band requires time-varying
force bounds: the corridor is the removal-rate band mapped through the contact
area via the pressure-speed removal model  MRR = k_p * (F/A) * w.

The nominal reference deliberately leaves the corridor partway through the run
(a stress profile) so the safety filters have something to reject; an approach
phase first drives the force through the corridor so every controller mode has
a well-defined engagement point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ratvcbf.barrier import BoundSchedule


def _circle_halfplane_area(x: float, y: float, r: float) -> float:
    """Area of {u <= x, v <= y} intersected with the disc of radius r at the origin."""
    if x <= -r or y <= -r:
        return 0.0
    x = min(x, r)
    y = min(y, r)

    def seg(u):  # antiderivative of sqrt(r^2 - u^2)
        return 0.5 * (u * math.sqrt(max(r * r - u * u, 0.0)) + r * r * math.asin(max(-1.0, min(1.0, u / r))))

    # integrate (clamp(y, -h(u), h(u)) + h(u)) over u in [-r, x], with chord
    # half-height h(u) = sqrt(r^2 - u^2); the clamp switches at |u| = c
    if y >= r:
        return 2.0 * (seg(x) - seg(-r))
    c = math.sqrt(r * r - y * y)
    area = 0.0
    if y >= 0.0:
        # full chord 2h for |u| > c, height y + h inside
        u1 = min(x, -c)
        area += 2.0 * (seg(u1) - seg(-r))
        if x > -c:
            u2 = min(x, c)
            area += y * (u2 + c) + (seg(u2) - seg(-c))
            if x > c:
                area += 2.0 * (seg(x) - seg(c))
    elif x > -c:
        # below the center line only the band |u| < c contributes
        u2 = min(x, c)
        area += y * (u2 + c) + (seg(u2) - seg(-c))
    return area


def contact_area(tool_center, plate, r: float) -> float:
    """Exact area of the radius-r disc clipped to the axis-aligned plate rectangle.

    plate is (width, height) with the rectangle spanning [0, width] x [0, height].
    """
    if not r > 0.0:
        raise ValueError("tool radius must be positive")
    cx, cy = float(tool_center[0]), float(tool_center[1])
    w, h = float(plate[0]), float(plate[1])
    # inclusion-exclusion over the four corner quarter-planes
    area = (_circle_halfplane_area(w - cx, h - cy, r)
            - _circle_halfplane_area(0.0 - cx, h - cy, r)
            - _circle_halfplane_area(w - cx, 0.0 - cy, r)
            + _circle_halfplane_area(0.0 - cx, 0.0 - cy, r))
    return float(min(max(area, 0.0), math.pi * r * r))


def preston_mrr(k_p: float, f_c: float, area: float, w: float) -> float:
    """Removal rate from contact force, contact area, and tool speed."""
    if not area > 0.0:
        raise ValueError(f"contact area must be positive, got {area}")
    return k_p * f_c * w / area


def force_from_mrr(mrr_target: float, k_p: float, area: float, w: float) -> float:
    """Contact force realizing a target removal rate at the given area and speed."""
    if not k_p * w > 0.0:
        raise ValueError("k_p * w must be positive; a stationary tool cannot remove material")
    if not area > 0.0:
        raise ValueError(f"contact area must be positive, got {area}")
    return mrr_target * area / (k_p * w)


@dataclass
class ScenarioConfig:
    # geometry
    plate: tuple = (0.3, 0.2)        # m
    tool_radius: float = 0.025       # m
    tool_speed: float = 0.05         # m/s
    path_inset: float = 0.0175       # loop distance from plate edges, m (0.7 r)
    # removal model
    k_p: float = 1.0
    mrr_desired: float = 500.0
    mrr_band_frac: float = 0.10
    force_band_frac: float | None = None   # defaults to the MRR band
    # plant and uncertainty
    theta_true: tuple = (1400.0, 70.0)
    theta_hat0: tuple = (1000.0, 10.0)
    vartheta0: tuple | None = None   # default: |theta_true - theta_hat0|
    m_o: float = 1.0
    delta: float = 0.0005            # true disturbance sup bound, N
    disturbance_kind: str = "sinusoid_plus_uniform"
    disturbance_frequency: float = 5.0
    # filter tuning
    # bound assumed by the filter, N; sized to cover the true process noise
    # plus the zero-order-hold input error of the tick-held QP solution
    filter_delta: float = 0.012
    issf_epsilon: float = 0.8
    alpha0: float = 60.0
    gamma_gain: tuple = (4.0e5, 4.0e5)
    tightening_backoff: float = 0.08
    damping_floor: float = 1.0       # lowest admissible damping in the box
    # set-membership identification
    smid_batch: int = 5
    smid_precision: float = 0.0008
    # reference profile
    nominal_gain: float = 2.0
    reference: str = "stress"        # "stress" or "center"
    approach_duration: float = 1.2
    t_stress: float = 5.6            # stress-phase start
    stress_frac: float = 0.94        # stress level, x lower bound
    ramp_duration: float = 0.6
    warm_start: bool = False         # start with the force already at corridor center
    # integration
    dt: float = 1e-3
    duration: float | None = None    # default: one full loop
    schedule_grid: float | None = None  # default: dt

    def __post_init__(self):
        if not self.tool_radius > 0.0:
            raise ValueError("tool radius must be positive")
        if self.tool_speed < 0.0:
            raise ValueError("tool speed must be nonnegative")
        if not 0.0 < self.mrr_band_frac < 1.0:
            raise ValueError("mrr_band_frac must lie in (0, 1)")
        if self.force_band_frac is not None and not 0.0 < self.force_band_frac < 1.0:
            raise ValueError("force_band_frac must lie in (0, 1)")
        if self.reference not in ("stress", "center"):
            raise ValueError("reference must be 'stress' or 'center'")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")

    @property
    def band_frac(self) -> float:
        return self.mrr_band_frac if self.force_band_frac is None else self.force_band_frac

    def loop_corners(self) -> np.ndarray:
        w, h = self.plate
        m = self.path_inset
        return np.array([[m, m], [w - m, m], [w - m, h - m], [m, h - m]])

    def loop_length(self) -> float:
        c = self.loop_corners()
        return float(np.sum(np.linalg.norm(np.roll(c, -1, axis=0) - c, axis=1)))

    def run_duration(self) -> float:
        if self.duration is not None:
            return self.duration
        if self.tool_speed == 0.0:
            raise ValueError("duration must be given when the tool is stationary")
        return self.loop_length() / self.tool_speed

    def vartheta_init(self) -> np.ndarray:
        if self.vartheta0 is not None:
            return np.asarray(self.vartheta0, dtype=float)
        return np.abs(np.asarray(self.theta_true, float) - np.asarray(self.theta_hat0, float))


def tool_center(cfg: ScenarioConfig, t: float) -> np.ndarray:
    """Position on the closed loop at constant speed; holds the start point if w = 0."""
    corners = cfg.loop_corners()
    if cfg.tool_speed == 0.0:
        return corners[0].copy()
    segs = np.roll(corners, -1, axis=0) - corners
    lengths = np.linalg.norm(segs, axis=1)
    s = (cfg.tool_speed * t) % cfg.loop_length()
    for corner, seg, length in zip(corners, segs, lengths):
        if s <= length:
            return corner + seg * (s / length)
        s -= length
    return corners[0].copy()


def nominal_p_controller(f_ref: float, f_meas: float, gain: float) -> float:
    """Feedforward plus proportional force correction."""
    if not gain > 0.0:
        raise ValueError("controller gain must be positive")
    return gain * (f_ref - f_meas) + f_ref


@dataclass
class ScenarioBundle:
    """Schedules and accessors the harness wires into the closed loop."""

    config: ScenarioConfig
    schedule: BoundSchedule
    times: np.ndarray
    areas: np.ndarray
    f_ref_vals: np.ndarray
    f_center_vals: np.ndarray

    def f_ref(self, t: float) -> float:
        return float(np.interp(t, self.times, self.f_ref_vals))

    def area_at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.areas))


def _reference_profile(cfg: ScenarioConfig, times: np.ndarray,
                       centers: np.ndarray, lowers: np.ndarray) -> np.ndarray:
    """Piecewise reference: approach ramp to center, center hold, stress below the corridor."""
    if cfg.reference == "center":
        if cfg.warm_start:
            return centers.copy()
        ramp = np.minimum(times / cfg.approach_duration, 1.0)
        return ramp * centers
    stress = cfg.stress_frac * lowers
    ref = np.where(times < cfg.approach_duration,
                   centers * (times / cfg.approach_duration), centers)
    if cfg.warm_start:
        ref = centers.copy()
    w = np.clip((times - cfg.t_stress) / cfg.ramp_duration, 0.0, 1.0)
    return (1.0 - w) * ref + w * stress


def build_bound_schedule(cfg: ScenarioConfig) -> ScenarioBundle:
    """Sample the loop, map the removal-rate band to force bounds, build the reference."""
    duration = cfg.run_duration()
    grid = cfg.schedule_grid if cfg.schedule_grid is not None else cfg.dt
    n = int(round(duration / grid))
    # one extra step of domain so integrator endpoints stay inside the schedule
    times = np.arange(n + 2) * grid
    areas = np.array([contact_area(tool_center(cfg, t), cfg.plate, cfg.tool_radius)
                      for t in times])
    band = cfg.band_frac
    scale = areas / (cfg.k_p * cfg.tool_speed)
    lowers = (1.0 - band) * cfg.mrr_desired * scale
    uppers = (1.0 + band) * cfg.mrr_desired * scale
    centers = cfg.mrr_desired * scale
    f_ref = _reference_profile(cfg, times, centers, lowers)
    schedule = BoundSchedule(times, lowers, uppers)
    return ScenarioBundle(config=cfg, schedule=schedule, times=times,
                          areas=areas, f_ref_vals=f_ref, f_center_vals=centers)
