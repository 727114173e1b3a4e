"""Two-mode flight control: min-snap + SE(3) tracking, and filtered velocity mode.

Position trajectories are piecewise degree-7 polynomials minimising the
integral of squared snap, with waypoint interpolation, rest boundary
conditions (zero velocity/acceleration/jerk at the ends), and continuity of
derivatives 1-4 at interior waypoints.  Yaw uses degree-3 polynomials
minimising squared yaw acceleration with the analogous conditions.  Both are
solved as one KKT linear system per axis (no general-purpose QP), in
per-segment normalised time for conditioning.

The SE(3) controller follows the geometric tracking construction: desired
force from position/velocity errors plus acceleration feedforward, desired
attitude from the force direction and reference yaw, moments from the
SO(3) attitude error with full flat-output angular-rate feedforward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import MultirotorState, VehicleParams
from .frames import quat_to_matrix, wrap_to_pi


class TrajectoryError(ValueError):
    """Raised for infeasible or singular trajectory problems."""


@dataclass
class FlatOutputRef:
    """Flat-output reference: position and derivatives through snap, plus yaw."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    jerk: np.ndarray
    snap: np.ndarray
    yaw: float
    yaw_rate: float


def hover_ref(position, yaw: float = 0.0) -> FlatOutputRef:
    return FlatOutputRef(
        position=np.asarray(position, dtype=float).copy(),
        velocity=np.zeros(3),
        acceleration=np.zeros(3),
        jerk=np.zeros(3),
        snap=np.zeros(3),
        yaw=yaw,
        yaw_rate=0.0,
    )


@dataclass(frozen=True)
class Se3Gains:
    k_pos: tuple[float, float, float] = (6.0, 6.0, 10.0)
    k_vel: tuple[float, float, float] = (4.0, 4.0, 6.0)
    k_rot: tuple[float, float, float] = (400.0, 400.0, 120.0)
    k_omega: tuple[float, float, float] = (40.0, 40.0, 18.0)

    def __post_init__(self):
        for name in ("k_pos", "k_vel", "k_rot", "k_omega"):
            if any(g <= 0.0 for g in getattr(self, name)):
                raise ValueError(f"controller gain {name} must be strictly positive")


def allocate_segment_times(waypoints, avg_speed: float, t_min: float = 0.5) -> np.ndarray:
    """Per-segment durations: distance / avg_speed, floored at t_min."""
    if avg_speed <= 0.0:
        raise ValueError("avg_speed must be positive")
    pts = np.asarray(waypoints, dtype=float)
    if pts.shape[0] < 2:
        raise ValueError("need at least two waypoints")
    lengths = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return np.maximum(lengths / avg_speed, t_min)


def _poly_derivative_row(degree: int, order: int, tau: float) -> np.ndarray:
    """Row of d^order/dtau^order of [1, tau, ..., tau^degree] at tau."""
    row = np.zeros(degree + 1)
    for j in range(order, degree + 1):
        c = 1.0
        for i in range(order):
            c *= j - i
        row[j] = c * tau ** (j - order)
    return row


def _cost_block(degree: int, order: int) -> np.ndarray:
    """Gram matrix of order-th derivatives of the monomial basis on [0, 1]."""
    n = degree + 1
    q = np.zeros((n, n))
    for j in range(order, n):
        aj = math.factorial(j) / math.factorial(j - order)
        for k in range(order, n):
            ak = math.factorial(k) / math.factorial(k - order)
            q[j, k] = aj * ak / (j + k - 2 * order + 1)
    return q


def _solve_min_derivative_spline(
    values: np.ndarray, durations: np.ndarray, degree: int, cost_order: int
) -> np.ndarray:
    """Minimise the integral of the squared cost_order-th derivative.

    Constraints: waypoint interpolation, zero derivatives 1..cost_order-1 at
    both ends, continuity of derivatives 1..cost_order at interior joints.
    Returns per-segment coefficients in normalised time tau = t/T, shape
    (segments, degree+1).
    """
    m = len(durations)
    n = degree + 1
    nvar = m * n

    rows = []
    rhs = []

    def add(cols: dict[int, float], b: float):
        row = np.zeros(nvar)
        for idx, v in cols.items():
            row[idx] = v
        rows.append(row)
        rhs.append(b)

    for i in range(m):
        base = i * n
        add({base: 1.0}, float(values[i]))
        end_row = _poly_derivative_row(degree, 0, 1.0)
        add({base + j: end_row[j] for j in range(n)}, float(values[i + 1]))

    for k in range(1, cost_order):
        row0 = _poly_derivative_row(degree, k, 0.0) / durations[0] ** k
        add({j: row0[j] for j in range(n) if row0[j] != 0.0}, 0.0)
        base = (m - 1) * n
        row1 = _poly_derivative_row(degree, k, 1.0) / durations[-1] ** k
        add({base + j: row1[j] for j in range(n) if row1[j] != 0.0}, 0.0)

    for i in range(m - 1):
        for k in range(1, cost_order + 1):
            left = _poly_derivative_row(degree, k, 1.0) / durations[i] ** k
            right = _poly_derivative_row(degree, k, 0.0) / durations[i + 1] ** k
            cols = {i * n + j: left[j] for j in range(n) if left[j] != 0.0}
            for j in range(n):
                if right[j] != 0.0:
                    cols[(i + 1) * n + j] = cols.get((i + 1) * n + j, 0.0) - right[j]
            add(cols, 0.0)

    cmat = np.vstack(rows)
    bvec = np.asarray(rhs)
    ncon = cmat.shape[0]

    qunit = _cost_block(degree, cost_order)
    qmat = np.zeros((nvar, nvar))
    for i in range(m):
        qmat[i * n : (i + 1) * n, i * n : (i + 1) * n] = qunit / durations[i] ** (
            2 * cost_order - 1
        )

    kkt = np.zeros((nvar + ncon, nvar + ncon))
    kkt[:nvar, :nvar] = 2.0 * qmat
    kkt[:nvar, nvar:] = cmat.T
    kkt[nvar:, :nvar] = cmat
    full_rhs = np.concatenate((np.zeros(nvar), bvec))
    try:
        sol = np.linalg.solve(kkt, full_rhs)
    except np.linalg.LinAlgError as exc:
        raise TrajectoryError(f"singular trajectory constraint system: {exc}") from exc
    coeffs = sol[:nvar].reshape(m, n)
    if np.max(np.abs(cmat @ sol[:nvar] - bvec)) > 1e-6 * max(
        1.0, float(np.max(np.abs(bvec)))
    ):
        raise TrajectoryError("trajectory constraint system is ill-conditioned")
    return coeffs


def _build_yaw_targets(yaws, positions_count: int, durations: np.ndarray) -> np.ndarray:
    """Fill unspecified yaws by time-linear interpolation; unwrap to continuity."""
    if yaws is None:
        yaws = [None] * positions_count
    yaws = list(yaws)
    known = [i for i, y in enumerate(yaws) if y is not None]
    if not known:
        return np.zeros(positions_count)
    # Unwrap the specified values in sequence so targets never jump by 2*pi.
    unwrapped: dict[int, float] = {}
    prev = float(yaws[known[0]])
    unwrapped[known[0]] = prev
    for i in known[1:]:
        prev = prev + wrap_to_pi(float(yaws[i]) - prev)
        unwrapped[i] = prev
    t_cum = np.concatenate(([0.0], np.cumsum(durations)))
    out = np.empty(positions_count)
    for i in range(positions_count):
        if i in unwrapped:
            out[i] = unwrapped[i]
        elif i < known[0]:
            out[i] = unwrapped[known[0]]
        elif i > known[-1]:
            out[i] = unwrapped[known[-1]]
        else:
            lo = max(k for k in known if k < i)
            hi = min(k for k in known if k > i)
            f = (t_cum[i] - t_cum[lo]) / (t_cum[hi] - t_cum[lo])
            out[i] = unwrapped[lo] + f * (unwrapped[hi] - unwrapped[lo])
    return out


@dataclass
class PiecewiseTrajectory:
    """Piecewise polynomial flat-output trajectory.

    Coefficients are in local segment time (seconds since segment start):
    pos_coeffs[i, axis, j] multiplies t_local**j.
    """

    durations: np.ndarray  # (m,)
    pos_coeffs: np.ndarray  # (m, 3, 8)
    yaw_coeffs: np.ndarray  # (m, 4)
    start_time: float = 0.0

    @property
    def total_duration(self) -> float:
        return float(np.sum(self.durations))

    @property
    def end_time(self) -> float:
        return self.start_time + self.total_duration

    def _eval_tables(self):
        # Cached per-segment derivative-coefficient tensors so evaluation is
        # a couple of matmuls per sample.
        cached = getattr(self, "_tables", None)
        if cached is not None:
            return cached
        m = len(self.durations)
        pos_tab = np.zeros((m, 5, 3, 8))
        yaw_tab = np.zeros((m, 2, 4))
        for k in range(5):
            for p in range(8 - k):
                fac = math.factorial(p + k) / math.factorial(p)
                pos_tab[:, k, :, p] = self.pos_coeffs[:, :, p + k] * fac
        for k in range(2):
            for p in range(4 - k):
                fac = math.factorial(p + k) / math.factorial(p)
                yaw_tab[:, k, p] = self.yaw_coeffs[:, p + k] * fac
        ends = np.cumsum(self.durations)
        object.__setattr__(self, "_tables", (pos_tab, yaw_tab, ends))
        return pos_tab, yaw_tab, ends


def min_snap_trajectory(
    waypoints, durations, yaws=None, start_time: float = 0.0
) -> PiecewiseTrajectory:
    """Minimum-snap position + minimum-acceleration yaw through waypoints.

    waypoints: (m+1, 3) array-like; durations: (m,) strictly positive;
    yaws: optional per-waypoint yaw targets (None entries interpolated).
    """
    pts = np.asarray(waypoints, dtype=float)
    durs = np.asarray(durations, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise TrajectoryError("waypoints must be (n, 3)")
    if len(durs) != pts.shape[0] - 1:
        raise TrajectoryError("waypoint count must equal durations count + 1")
    if np.any(durs <= 0.0):
        raise TrajectoryError("segment durations must be strictly positive")

    m = len(durs)
    pos_coeffs = np.zeros((m, 3, 8))
    for axis in range(3):
        c_tau = _solve_min_derivative_spline(pts[:, axis], durs, degree=7, cost_order=4)
        scale = durs[:, None] ** np.arange(8)[None, :]
        pos_coeffs[:, axis, :] = c_tau / scale

    yaw_targets = _build_yaw_targets(yaws, pts.shape[0], durs)
    y_tau = _solve_min_derivative_spline(yaw_targets, durs, degree=3, cost_order=2)
    yaw_coeffs = y_tau / (durs[:, None] ** np.arange(4)[None, :])

    return PiecewiseTrajectory(durs, pos_coeffs, yaw_coeffs, start_time)


def eval_trajectory(traj: PiecewiseTrajectory, t: float) -> FlatOutputRef:
    """Sample the trajectory; out-of-range times clamp to the boundary states."""
    rel = t - traj.start_time
    total = traj.total_duration
    if rel <= 0.0:
        pos = traj.pos_coeffs[0, :, 0].copy()
        return FlatOutputRef(
            pos, np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3),
            float(traj.yaw_coeffs[0, 0]), 0.0,
        )
    if rel >= total:
        tl = float(traj.durations[-1])
        powers = tl ** np.arange(8)
        pos = traj.pos_coeffs[-1] @ powers
        yaw = float(traj.yaw_coeffs[-1] @ (tl ** np.arange(4)))
        return FlatOutputRef(
            pos, np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3), yaw, 0.0
        )
    pos_tab, yaw_tab, ends = traj._eval_tables()
    seg = int(np.searchsorted(ends, rel, side="right"))
    seg = min(seg, len(traj.durations) - 1)
    t_local = rel - (ends[seg] - traj.durations[seg])

    powers = np.empty(8)
    powers[0] = 1.0
    for j in range(1, 8):
        powers[j] = powers[j - 1] * t_local
    vals = pos_tab[seg] @ powers  # (5, 3)
    yaw_vals = yaw_tab[seg] @ powers[:4]
    return FlatOutputRef(
        position=vals[0],
        velocity=vals[1],
        acceleration=vals[2],
        jerk=vals[3],
        snap=vals[4],
        yaw=float(yaw_vals[0]),
        yaw_rate=float(yaw_vals[1]),
    )


def _vee(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # np.cross has high fixed overhead on 3-vectors.
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def se3_control(
    state: MultirotorState,
    ref: FlatOutputRef,
    gains: Se3Gains,
    params: VehicleParams,
) -> tuple[float, np.ndarray]:
    """Geometric tracking control; returns (collective thrust N, body moments N*m).

    Attitude and rate gains are inertia-normalised (1/s^2 and 1/s); the
    moment command is I * (-k_rot o e_R - k_omega o e_w) + w x Iw.
    """
    m = params.mass
    kp = gains.k_pos
    kv = gains.k_vel
    kr = gains.k_rot
    kw = gains.k_omega
    ix, iy, iz = params.inertia_diag

    px, py, pz = state.position.tolist()
    vx, vy, vz = state.velocity.tolist()
    rx, ry, rz = ref.position.tolist()
    rvx, rvy, rvz = ref.velocity.tolist()
    rax, ray, raz = ref.acceleration.tolist()

    fx = m * (rax + kp[0] * (rx - px) + kv[0] * (rvx - vx))
    fy = m * (ray + kp[1] * (ry - py) + kv[1] * (rvy - vy))
    fz = m * (raz + params.gravity + kp[2] * (rz - pz) + kv[2] * (rvz - vz))
    f_des = np.array([fx, fy, fz])

    rot = quat_to_matrix(state.orientation)
    omega = state.angular_velocity
    wx, wy, wz = omega.tolist()
    thrust = max(fx * rot[0, 2] + fy * rot[1, 2] + fz * rot[2, 2], 0.0)

    f_norm = math.sqrt(fx * fx + fy * fy + fz * fz)
    rot_des = rot
    omega_des = None
    if f_norm >= 1e-6:
        b3 = f_des / f_norm
        # Feedforward uses reference jerk/yaw-rate only (error terms omitted).
        f_dot = m * ref.jerk
        b3_dot = (f_dot - b3 * float(b3 @ f_dot)) / f_norm
        cy_, sy_ = math.cos(ref.yaw), math.sin(ref.yaw)
        b1_c = np.array([cy_, sy_, 0.0])
        b1_c_dot = ref.yaw_rate * np.array([-sy_, cy_, 0.0])
        c = _cross(b3, b1_c)
        c_norm = math.sqrt(float(c @ c))
        if c_norm >= 1e-6:
            b2 = c / c_norm
            c_dot = _cross(b3_dot, b1_c) + _cross(b3, b1_c_dot)
            b2_dot = (c_dot - b2 * float(b2 @ c_dot)) / c_norm
            b1 = _cross(b2, b3)
            b1_dot = _cross(b2_dot, b3) + _cross(b2, b3_dot)
            rot_des = np.column_stack((b1, b2, b3))
            rot_des_dot = np.column_stack((b1_dot, b2_dot, b3_dot))
            omega_hat = rot_des.T @ rot_des_dot
            omega_des = _vee(0.5 * (omega_hat - omega_hat.T))

    err = rot_des.T @ rot
    # e_R = 0.5 * vee(Rd^T R - R^T Rd); the bracket is err - err^T.
    e_rot_x = 0.5 * (err[2, 1] - err[1, 2])
    e_rot_y = 0.5 * (err[0, 2] - err[2, 0])
    e_rot_z = 0.5 * (err[1, 0] - err[0, 1])
    if omega_des is None:
        e_w_x, e_w_y, e_w_z = wx, wy, wz
    else:
        od = rot.T @ (rot_des @ omega_des)
        e_w_x, e_w_y, e_w_z = wx - od[0], wy - od[1], wz - od[2]

    moments = np.array(
        [
            ix * (-kr[0] * e_rot_x - kw[0] * e_w_x) + (wy * iz * wz - wz * iy * wy),
            iy * (-kr[1] * e_rot_y - kw[1] * e_w_y) + (wz * ix * wx - wx * iz * wz),
            iz * (-kr[2] * e_rot_z - kw[2] * e_w_z) + (wx * iy * wy - wy * ix * wx),
        ]
    )
    return thrust, moments


@dataclass(frozen=True)
class VelocityFilterConfig:
    slew_v_fwd: float = 4.0  # m/s^2
    slew_yaw_rate: float = 6.0  # rad/s^2
    time_constant: float = 0.15  # s


@dataclass
class VelocityFilterState:
    filtered_v_fwd: float
    filtered_yaw_rate: float
    virtual_position: np.ndarray  # altitude pinned to the hold altitude
    virtual_yaw: float
    # Slew-stage memory: the rate-limited commands feeding the low-pass.
    slewed_v_fwd: float = 0.0
    slewed_yaw_rate: float = 0.0


def velocity_filter_from_state(state: MultirotorState, hold_altitude: float, yaw: float) -> VelocityFilterState:
    pos = state.position.copy()
    pos[2] = hold_altitude
    return VelocityFilterState(0.0, 0.0, pos, yaw)


def velocity_mode_step(
    fs: VelocityFilterState,
    cmd_v_fwd: float,
    cmd_yaw_rate: float,
    dt: float,
    cfg: VelocityFilterConfig = VelocityFilterConfig(),
) -> tuple[VelocityFilterState, FlatOutputRef]:
    """Slew-limit, low-pass, and integrate a unicycle command pair.

    Stage 1 rate-limits the raw command (its own state), stage 2 low-passes
    the slewed command, stage 3 integrates the unicycle kinematics into the
    virtual setpoint.  Altitude is held constant at the filter's configured
    altitude.  Returns the new filter state and the setpoint as a flat
    output with velocity feedforward and zero higher derivatives.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    slew_v = cfg.slew_v_fwd * dt
    slew_w = cfg.slew_yaw_rate * dt
    target_v = fs.slewed_v_fwd + min(max(cmd_v_fwd - fs.slewed_v_fwd, -slew_v), slew_v)
    target_w = fs.slewed_yaw_rate + min(
        max(cmd_yaw_rate - fs.slewed_yaw_rate, -slew_w), slew_w
    )
    alpha = dt / (cfg.time_constant + dt)
    v = fs.filtered_v_fwd + alpha * (target_v - fs.filtered_v_fwd)
    w = fs.filtered_yaw_rate + alpha * (target_w - fs.filtered_yaw_rate)

    yaw = fs.virtual_yaw + w * dt
    heading = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    pos = fs.virtual_position + v * dt * heading
    pos[2] = fs.virtual_position[2]

    new_state = VelocityFilterState(v, w, pos, yaw, target_v, target_w)
    ref = FlatOutputRef(
        position=pos.copy(),
        velocity=v * heading,
        acceleration=np.zeros(3),
        jerk=np.zeros(3),
        snap=np.zeros(3),
        yaw=yaw,
        yaw_rate=w,
    )
    return new_state, ref
