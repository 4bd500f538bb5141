"""Set-membership identification of the contact parameters.

Maintains an axis-aligned interval set guaranteed to contain the true
parameter vector, assuming the per-sample residual bound (the precision)
covers the realized disturbance.  Each batch refines the box by solving, per
coordinate, the exact linear programs

    min / max theta_i   s.t.   theta in box,  |Y_j - D_j theta| <= precision

for all data j in the batch.  The problems have at most two variables, so the
LPs are solved exactly by enumerating basic feasible solutions (constraint
intersections); no external solver is involved.  An infeasible batch (the
precision was too small for the realized residuals) leaves the box unchanged
and is reported to the caller rather than corrupting soundness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ratvcbf.plant import SysState, drift, input_matrix, regressor

_FEAS_TOL = 1e-9


@dataclass
class ParamBox:
    """Axis-aligned interval set, lower <= upper elementwise."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise ValueError("box lower and upper must have the same dimension")
        if np.any(self.lower > self.upper):
            raise ValueError("box lower bound exceeds upper bound")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, theta, atol: float = 0.0) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.lower - atol) and np.all(theta <= self.upper + atol))

    def clamp(self, theta) -> np.ndarray:
        return np.clip(np.asarray(theta, dtype=float), self.lower, self.upper)

    def copy(self) -> "ParamBox":
        return ParamBox(self.lower.copy(), self.upper.copy())


@dataclass
class RegressionDatum:
    """One input-output sample: residual Y, regressor D, and its timestamp."""

    Y: np.ndarray
    D: np.ndarray
    t: float

    def __post_init__(self):
        self.Y = np.atleast_1d(np.asarray(self.Y, dtype=float))
        self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if self.D.shape[0] != self.Y.shape[0]:
            raise ValueError("regressor rows must match residual dimension")
        if not (np.all(np.isfinite(self.Y)) and np.all(np.isfinite(self.D))):
            raise ValueError("regression data must be finite")


def make_datum(state: SysState, state_deriv: np.ndarray, u, m_o: float) -> RegressionDatum:
    """Build Y = xdot - f(x) - g(x) u and D = F(x) so that Y = D theta + g d exactly."""
    state_deriv = np.asarray(state_deriv, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    g = input_matrix(state.n_axes, m_o)
    Y = state_deriv - drift(state) - g @ u
    return RegressionDatum(Y=Y, D=regressor(state, m_o), t=state.t)


def _halfplane_rows(batch, precision: float):
    """Stack |Y - D theta| <= precision as A theta <= b rows, unit-normalized.

    Rows with a zero regressor carry no direction; they are returned separately
    as residual feasibility checks.
    """
    A_rows, b_rows = [], []
    feasible = True
    for datum in batch:
        for Yi, Di in zip(datum.Y, datum.D):
            norm = float(np.linalg.norm(Di))
            if norm == 0.0:
                if abs(Yi) > precision + _FEAS_TOL:
                    feasible = False
                continue
            A_rows.append(Di / norm)
            b_rows.append((Yi + precision) / norm)
            A_rows.append(-Di / norm)
            b_rows.append((precision - Yi) / norm)
    if not A_rows:
        return np.zeros((0, batch[0].D.shape[1])), np.zeros(0), feasible
    return np.asarray(A_rows), np.asarray(b_rows), feasible


def _box_rows(box: ParamBox):
    k = box.dim
    eye = np.eye(k)
    A = np.vstack([eye, -eye])
    b = np.concatenate([box.upper, -box.lower])
    return A, b


def _extremes_1d(A, b, box: ParamBox):
    lo, hi = float(box.lower[0]), float(box.upper[0])
    for a, bi in zip(A[:, 0], b):
        if a > 0.0:
            hi = min(hi, bi / a)
        elif a < 0.0:
            lo = max(lo, bi / a)
        elif bi < -_FEAS_TOL:
            return None
    if lo > hi + _FEAS_TOL:
        return None
    hi = max(hi, lo)
    return np.array([lo]), np.array([hi])


def _extremes_2d(A, b):
    """Coordinatewise extremes of {A theta <= b} by vertex enumeration.

    The box rows are part of (A, b), so the feasible set is bounded and, if
    nonempty, has at least one vertex.  All constraint pairs are solved at
    once by Cramer's rule.
    """
    m = A.shape[0]
    ii, jj = np.triu_indices(m, k=1)
    a1, b1 = A[ii], b[ii]
    a2, b2 = A[jj], b[jj]
    det = a1[:, 0] * a2[:, 1] - a1[:, 1] * a2[:, 0]
    ok = np.abs(det) > 1e-12
    if not np.any(ok):
        return None
    det = det[ok]
    vx = (b1[ok] * a2[ok, 1] - a1[ok, 1] * b2[ok]) / det
    vy = (a1[ok, 0] * b2[ok] - b1[ok] * a2[ok, 0]) / det
    verts = np.column_stack([vx, vy])
    feas = np.all(verts @ A.T <= b + _FEAS_TOL, axis=1)
    if not np.any(feas):
        return None
    verts = verts[feas]
    return verts.min(axis=0), verts.max(axis=0)


def update(box: ParamBox, batch, precision: float) -> tuple[ParamBox, bool]:
    """Refine the box against one batch of data.

    Returns (new_box, consistent).  When the constraint system is infeasible
    the original box is returned with consistent=False; the feasible set is
    otherwise intersected exactly and the result is always contained in the
    input box.
    """
    if not precision > 0.0:
        raise ValueError(f"precision must be positive, got {precision}")
    if not batch:
        return box, True
    A_d, b_d, feasible = _halfplane_rows(batch, precision)
    if not feasible:
        return box, False
    if A_d.shape[0] == 0:
        return box, True
    A_box, b_box = _box_rows(box)
    A = np.vstack([A_d, A_box])
    b = np.concatenate([b_d, b_box])
    if box.dim == 1:
        ext = _extremes_1d(A, b, box)
    elif box.dim == 2:
        ext = _extremes_2d(A, b)
    else:
        raise NotImplementedError("interval refinement implemented for k <= 2")
    if ext is None:
        return box, False
    lower, upper = ext
    # monotonicity guard against roundoff: never leave the prior box
    lower = np.maximum(lower, box.lower)
    upper = np.minimum(upper, box.upper)
    upper = np.maximum(upper, lower)
    return ParamBox(lower, upper), True


def vartheta_from_box(box: ParamBox, theta_hat) -> np.ndarray:
    """Per-element worst-case distance from the estimate to the box faces."""
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    if not box.contains(theta_hat, atol=1e-9):
        raise ValueError("theta_hat lies outside the box; project it first")
    return np.maximum(theta_hat - box.lower, box.upper - theta_hat)


def _line_scan(batch, precision, axis_vals, axis, other_lo, other_hi):
    """Feasible cross-interval of the constraint set on each grid line.

    For every value of coordinate `axis` on the grid, intersect the residual
    band of each datum with the box range of the other coordinate; a line is
    feasible when its interval is nonempty.  Returns (feasible mask, interval
    bounds), or None on a contradictory zero-regressor row.
    """
    n = axis_vals.shape[0]
    lo = np.full(n, other_lo)
    hi = np.full(n, other_hi)
    feasible = np.ones(n, dtype=bool)
    for datum in batch:
        for Yi, Di in zip(datum.Y, datum.D):
            da = float(Di[axis])
            do = float(Di[1 - axis])
            if da == 0.0 and do == 0.0:
                if abs(Yi) > precision + _FEAS_TOL:
                    return None
                continue
            lo_res, hi_res = Yi - precision, Yi + precision
            if do == 0.0:
                feasible &= (da * axis_vals >= lo_res - _FEAS_TOL) \
                    & (da * axis_vals <= hi_res + _FEAS_TOL)
                continue
            t1 = (lo_res - da * axis_vals) / do
            t2 = (hi_res - da * axis_vals) / do
            lo = np.maximum(lo, np.minimum(t1, t2))
            hi = np.minimum(hi, np.maximum(t1, t2))
    feasible &= lo <= hi + _FEAS_TOL
    return feasible, lo, hi


def grid_extremes(box: ParamBox, batch, precision: float, grid: int = 2001):
    """Dense-grid oracle for the 2-D refinement, independent of the LP path.

    Scans the grid lines of each coordinate over the prior box and intersects
    the constraint band of every datum with each line, keeping the lines with a
    nonempty feasible cross-interval.  Each coordinate extreme is therefore
    exact to within one grid cell regardless of the constraint slopes.  Returns
    None when no grid line is feasible.
    """
    if box.dim != 2:
        raise ValueError("grid oracle is for 2-parameter problems")
    out_lo = np.empty(2)
    out_hi = np.empty(2)
    for axis in range(2):
        vals = np.linspace(box.lower[axis], box.upper[axis], grid)
        scan = _line_scan(batch, precision, vals, axis,
                          box.lower[1 - axis], box.upper[1 - axis])
        if scan is None:
            return None
        feasible, _, _ = scan
        if not np.any(feasible):
            return None
        out_lo[axis] = vals[feasible].min()
        out_hi[axis] = vals[feasible].max()
    return out_lo, out_hi
